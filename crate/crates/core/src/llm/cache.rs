//! Content-addressed response cache: one JSON file per
//! `(model, prompt id, sample id, temperature)` key.

use std::fmt::Write as _;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub model: String,
    pub prompt_id: String,
    pub sample_id: String,
    pub temperature: f64,
}

impl CacheKey {
    /// Hex SHA-256 of the key's canonical JSON form.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&(&self.model, &self.prompt_id, &self.sample_id, self.temperature))
            .expect("key serializes");
        Sha256::digest(canonical.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    #[serde(flatten)]
    pub key: CacheKey,
    pub response_text: String,
}

/// Readers never lock; writers are serialized and publish by atomic rename.
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
    tmp_counter: AtomicU64,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ResponseCache { dir, write_lock: Mutex::new(()), tmp_counter: AtomicU64::new(0) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.digest()))
    }

    /// `Ok(None)` on a miss. An entry whose stored key differs from `key`
    /// (a digest collision or a hand-edited file) is treated as a miss.
    pub fn get(&self, key: &CacheKey) -> std::io::Result<Option<String>> {
        let bytes = match fs::read(self.path_for(key)) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let entry: CacheEntry =
            serde_json::from_slice(&bytes).map_err(|e| std::io::Error::new(ErrorKind::InvalidData, e))?;
        Ok((entry.key == *key).then_some(entry.response_text))
    }

    pub fn put(&self, key: &CacheKey, response_text: &str) -> std::io::Result<()> {
        let entry = CacheEntry { key: key.clone(), response_text: response_text.to_string() };
        let mut bytes = serde_json::to_vec_pretty(&entry).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        let target = self.path_for(key);
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{}.{}.{n}.tmp", key.digest(), std::process::id()));
        fs::write(&tmp, &bytes)?;
        fs::rename(&tmp, &target)
    }
}
