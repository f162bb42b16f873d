//! Chat-completion annotation: run prompts over samples, cache every
//! response for replay, and align quoted highlights back to token spans.

mod align;
mod cache;
mod pool;
mod prompt;
mod transport;

use std::fmt;
use std::thread;

use serde::{Deserialize, Serialize};

pub use align::{align_response, extractions, Alignment, Located};
pub use cache::{CacheEntry, CacheKey, ResponseCache};
pub use pool::{run_pool, FailureEntry, PoolRun, UnmatchedEntry};
pub use prompt::{PromptTemplate, DEFAULT_FORMAT_SUFFIX};
pub use transport::{completion_text, ChatTransport, HttpTransport, ModelConfig, OfflineTransport, TransportError};

use crate::corpus::SampleRecord;
use crate::pooling::CandidateId;
use crate::span::TokenizedContent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAnnotation {
    pub sample_id: String,
    pub candidate: CandidateId,
    pub response_text: String,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotateErrorKind {
    #[error("gave up after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: TransportError },
    #[error("authentication failed: {0}")]
    Auth(TransportError),
    #[error("timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("request rejected: {0}")]
    Rejected(TransportError),
    #[error("cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct AnnotateError {
    pub candidate: CandidateId,
    pub sample_id: String,
    pub kind: AnnotateErrorKind,
}

impl fmt::Display for AnnotateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "candidate {} sample {:?}: {}", self.candidate, self.sample_id, self.kind)
    }
}

/// Transport plus optional cache. With a warm cache no request is made.
#[derive(Debug)]
pub struct Annotator<T> {
    transport: T,
    cache: Option<ResponseCache>,
}

impl<T: ChatTransport> Annotator<T> {
    pub fn new(transport: T, cache: Option<ResponseCache>) -> Self {
        Annotator { transport, cache }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    pub fn annotate(
        &self,
        sample: &SampleRecord,
        prompt: &PromptTemplate,
        config: &ModelConfig,
    ) -> Result<RawAnnotation, AnnotateError> {
        let candidate = CandidateId::new(&config.model, &prompt.id);
        let fail = |kind| AnnotateError { candidate: candidate.clone(), sample_id: sample.id.clone(), kind };
        let key = CacheKey {
            model: config.model.clone(),
            prompt_id: prompt.id.clone(),
            sample_id: sample.id.clone(),
            temperature: config.temperature,
        };
        if let Some(cache) = &self.cache {
            if let Some(text) = cache.get(&key).map_err(|e| fail(AnnotateErrorKind::Cache(e.to_string())))? {
                return Ok(RawAnnotation {
                    sample_id: sample.id.clone(),
                    candidate,
                    response_text: text,
                    cached: true,
                });
            }
        }

        let rendered = prompt.render(&sample.text);
        let mut attempt = 0u32;
        let text = loop {
            attempt += 1;
            match self.transport.complete(config, &rendered) {
                Ok(text) => break text,
                Err(e @ TransportError::Auth { .. }) => return Err(fail(AnnotateErrorKind::Auth(e))),
                Err(e) if !e.is_retryable() => return Err(fail(AnnotateErrorKind::Rejected(e))),
                Err(e) if attempt > config.max_retries => {
                    return Err(fail(match e {
                        TransportError::Timeout => AnnotateErrorKind::Timeout { attempts: attempt },
                        last => AnnotateErrorKind::Transport { attempts: attempt, last },
                    }))
                }
                Err(_) => thread::sleep(config.backoff_delay(attempt)),
            }
        };

        if let Some(cache) = &self.cache {
            cache.put(&key, &text).map_err(|e| fail(AnnotateErrorKind::Cache(e.to_string())))?;
        }
        Ok(RawAnnotation { sample_id: sample.id.clone(), candidate, response_text: text, cached: false })
    }
}

/// Align a raw response against the sample's tokenized text.
pub fn parse_response(raw: &RawAnnotation, content: &TokenizedContent) -> Alignment {
    align_response(&raw.response_text, content)
}
