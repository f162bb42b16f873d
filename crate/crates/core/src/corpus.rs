//! JSONL sample files, train/dev/test splitting and corpus statistics.
//!
//! A record looks like
//!
//! ```json
//! {"id": "ihc-17", "text": "…", "spans": [[4, 16], [30, 35]], "source": "gpt-3.5/prompt1"}
//! ```
//!
//! `spans` holds half-open character offsets into the NFC-normalized text.
//! Unknown fields are kept and written back unchanged.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::span::{char_span_to_token_span, tokenize, Span, SpanSet, TokenizedContent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub spans: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// A record with its text tokenized and spans snapped to tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSample {
    pub id: String,
    pub source: String,
    pub content: TokenizedContent,
    pub spans: SpanSet,
}

impl SampleRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, spans: Vec<(usize, usize)>) -> Self {
        SampleRecord { id: id.into(), text: text.into(), spans, source: String::new(), extra: Map::new() }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    /// Tokenize the text and snap every character span onto tokens.
    pub fn annotate(&self) -> Result<AnnotatedSample> {
        let content = tokenize(&self.text);
        let spans = snap_spans(&self.id, &content, &self.spans)?;
        Ok(AnnotatedSample { id: self.id.clone(), source: self.source.clone(), content, spans })
    }

    /// Record for `content` whose character spans cover exactly the tokens of `spans`.
    pub fn from_tokens(id: impl Into<String>, content: &TokenizedContent, spans: &SpanSet) -> Self {
        let tokens = content.tokens();
        let chars = spans.iter().map(|s| (tokens[s.start()].char_start, tokens[s.end() - 1].char_end)).collect();
        SampleRecord::new(id, content.text(), chars)
    }
}

fn snap_spans(id: &str, content: &TokenizedContent, chars: &[(usize, usize)]) -> Result<SpanSet> {
    let mut spans: Vec<Span> = Vec::with_capacity(chars.len());
    for &(start, end) in chars {
        match char_span_to_token_span(content, start, end) {
            Ok(Some(span)) => spans.push(span),
            Ok(None) => return Err(Error::validation(id, format!("span [{start}, {end}) covers no token"))),
            Err(e) => return Err(Error::validation(id, e.to_string())),
        }
    }
    SpanSet::validate(content.len(), spans).map_err(|e| Error::validation(id, e.to_string()))
}

/// Parse and validate JSONL from a reader. Blank lines are skipped; `path`
/// only labels error messages.
pub fn read_jsonl<R: BufRead>(input: R, path: &Path) -> Result<Vec<AnnotatedSample>> {
    Ok(read_records(input, path)?.into_iter().map(|(_, s)| s).collect())
}

fn read_records<R: BufRead>(input: R, path: &Path) -> Result<Vec<(SampleRecord, AnnotatedSample)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert((record.id.clone(), record.source.clone())) {
            return Err(Error::validation(
                &record.id,
                format!("duplicate id for source {:?} ({}:{})", record.source, path.display(), i + 1),
            ));
        }
        let annotated = record.annotate()?;
        out.push((record, annotated));
    }
    Ok(out)
}

/// Load and validate every record of a JSONL file.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(read_records(BufReader::new(file), path)?.into_iter().map(|(r, _)| r).collect())
}

/// Load a JSONL file straight into tokenized samples.
pub fn load_annotated(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSample>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file), path)
}

pub fn write_records<W: Write>(mut out: W, records: &[SampleRecord]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_jsonl(path: impl AsRef<Path>, records: &[SampleRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_records(&mut out, records).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const EIGHT_ONE_ONE: SplitRatios = SplitRatios { train: 0.8, dev: 0.1, test: 0.1 };

    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self> {
        let r = SplitRatios { train, dev, test };
        if [train, dev, test].iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::input(format!("split ratios must be positive, got {train}/{dev}/{test}")));
        }
        if (train + dev + test - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("split ratios must sum to 1, got {}", train + dev + test)));
        }
        Ok(r)
    }

    /// Fold sizes for `n` items by largest remainder: every fold gets the
    /// floor of its quota, leftover items go to the largest fractional
    /// parts (ties: train, dev, test).
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let quotas = [self.train, self.dev, self.test].map(|r| r * n as f64);
        // tolerate representation error such as 0.1 * 30 = 3.0000000000000004
        let mut sizes = quotas.map(|q| (q + 1e-9).floor() as usize);
        let mut order = [0usize, 1, 2];
        let frac = |i: usize| quotas[i] - sizes[i] as f64;
        order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
        let assigned: usize = sizes.iter().sum();
        for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
            sizes[i] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
    pub warnings: Vec<String>,
}

/// Shuffle with a seeded ChaCha8 generator and cut into train/dev/test.
pub fn split<T>(mut samples: Vec<T>, ratios: SplitRatios, seed: u64) -> Split<T> {
    let [n_train, n_dev, n_test] = ratios.sizes(samples.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.shuffle(&mut rng);

    let test = samples.split_off(n_train + n_dev);
    let dev = samples.split_off(n_train);
    let mut warnings = Vec::new();
    for (name, len) in [("dev", n_dev), ("test", n_test)] {
        if len == 0 {
            warnings.push(format!("{name} fold is empty ({} samples total)", n_train + n_dev + n_test));
        }
    }
    Split { train: samples, dev, test, warnings }
}

/// How ALT is averaged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AltAveraging {
    /// Every span in the corpus counts once.
    #[default]
    Pooled,
    /// Mean span length per sample (samples with spans only), then averaged.
    PerSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_samples: usize,
    pub n_spans: usize,
    pub tpc_mean: f64,
    pub tpc_std: f64,
    pub alt_mean: f64,
    pub alt_std: f64,
    pub alt_averaging: AltAveraging,
}

impl CorpusStats {
    /// `"1.7 (0.9)"`.
    pub fn tpc_display(&self) -> String {
        mean_std_display(self.tpc_mean, self.tpc_std)
    }

    pub fn alt_display(&self) -> String {
        mean_std_display(self.alt_mean, self.alt_std)
    }
}

pub fn mean_std_display(mean: f64, std: f64) -> String {
    format!("{mean:.1} ({std:.1})")
}

/// Population mean and standard deviation; `(0, 0)` for no values.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Targets per content and average target length (tokens).
pub fn stats<'a>(samples: impl IntoIterator<Item = &'a SpanSet>, alt: AltAveraging) -> Result<CorpusStats> {
    let mut tpc = Vec::new();
    let mut lengths = Vec::new();
    let mut per_sample = Vec::new();
    for spans in samples {
        tpc.push(spans.len() as f64);
        let lens: Vec<f64> = spans.iter().map(|s| s.len() as f64).collect();
        if !lens.is_empty() {
            per_sample.push(mean_std(&lens).0);
        }
        lengths.extend(lens);
    }
    if tpc.is_empty() {
        return Err(Error::input("cannot compute statistics of an empty corpus"));
    }
    let (tpc_mean, tpc_std) = mean_std(&tpc);
    let (alt_mean, alt_std) = match alt {
        AltAveraging::Pooled => mean_std(&lengths),
        AltAveraging::PerSample => mean_std(&per_sample),
    };
    Ok(CorpusStats {
        n_samples: tpc.len(),
        n_spans: lengths.len(),
        tpc_mean,
        tpc_std,
        alt_mean,
        alt_std,
        alt_averaging: alt,
    })
}
