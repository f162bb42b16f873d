use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use serde::Serialize;

use super::{parse_response, AnnotateError, Annotator, ChatTransport, ModelConfig, PromptTemplate, RawAnnotation};
use crate::corpus::{AnnotatedSample, SampleRecord};
use crate::error::{Error, Result};
use crate::pooling::{CandidateId, CandidatePool, SampleSpans};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailureEntry {
    pub candidate: CandidateId,
    pub sample_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnmatchedEntry {
    pub candidate: CandidateId,
    pub sample_id: String,
    pub extraction: String,
}

/// Outcome of annotating every (model, prompt, sample) triple.
#[derive(Debug, Clone)]
pub struct PoolRun {
    /// Candidates that succeeded on every sample.
    pub pool: CandidatePool,
    /// Raw responses in job order (model, prompt, sample).
    pub annotations: Vec<RawAnnotation>,
    pub unmatched: Vec<UnmatchedEntry>,
    /// Failure manifest, one entry per failed triple.
    pub failures: Vec<FailureEntry>,
    pub attempted: usize,
    samples: Vec<AnnotatedSample>,
}

impl PoolRun {
    pub fn failed_candidates(&self) -> BTreeSet<&CandidateId> {
        self.failures.iter().map(|f| &f.candidate).collect()
    }

    /// Responses served from the cache.
    pub fn cache_hits(&self) -> usize {
        self.annotations.iter().filter(|a| a.cached).count()
    }

    /// Candidate outputs as JSONL records; `source` holds the `system/prompt` label.
    pub fn records(&self) -> Vec<SampleRecord> {
        let mut out = Vec::new();
        for (id, outputs) in self.pool.candidates() {
            for sample in &self.samples {
                let spans = &outputs[&sample.id];
                out.push(SampleRecord::from_tokens(&sample.id, &sample.content, spans).with_source(id.label()));
            }
        }
        out
    }
}

/// Annotate every sample with every (model, prompt) pair, keeping at most
/// `concurrency_limit` requests in flight. The samples' own spans are the
/// gold. A candidate with any failed sample is left out of the pool and
/// listed in the failure manifest.
pub fn run_pool<T: ChatTransport>(
    annotator: &Annotator<T>,
    samples: &[SampleRecord],
    prompts: &[PromptTemplate],
    configs: &[ModelConfig],
    concurrency_limit: usize,
) -> Result<PoolRun> {
    let annotated = samples.iter().map(SampleRecord::annotate).collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    for s in &annotated {
        if !seen.insert(&s.id) {
            return Err(Error::validation(&s.id, "duplicate sample id in pool input"));
        }
    }
    let mut ids = BTreeSet::new();
    for config in configs {
        for prompt in prompts {
            if !ids.insert(CandidateId::new(&config.model, &prompt.id)) {
                return Err(Error::input(format!("candidate ({}, {}) appears twice", config.model, prompt.id)));
            }
        }
    }

    let jobs: Vec<(&ModelConfig, &PromptTemplate, usize)> = configs
        .iter()
        .flat_map(|c| prompts.iter().flat_map(move |p| (0..samples.len()).map(move |i| (c, p, i))))
        .collect();

    let results = run_jobs(jobs.len(), concurrency_limit.max(1), |j| {
        let (config, prompt, i) = jobs[j];
        annotator.annotate(&samples[i], prompt, config)
    });

    let gold: SampleSpans = annotated.iter().map(|s| (s.id.clone(), s.spans.clone())).collect();
    let mut pool = CandidatePool::new(gold);
    let mut outputs: BTreeMap<CandidateId, SampleSpans> = BTreeMap::new();
    let mut annotations = Vec::new();
    let mut unmatched = Vec::new();
    let mut failures = Vec::new();

    for (j, result) in results.into_iter().enumerate() {
        let (_, _, i) = jobs[j];
        match result {
            Ok(raw) => {
                let alignment = parse_response(&raw, &annotated[i].content);
                unmatched.extend(alignment.unmatched.into_iter().map(|extraction| UnmatchedEntry {
                    candidate: raw.candidate.clone(),
                    sample_id: raw.sample_id.clone(),
                    extraction,
                }));
                outputs.entry(raw.candidate.clone()).or_default().insert(raw.sample_id.clone(), alignment.spans);
                annotations.push(raw);
            }
            Err(AnnotateError { candidate, sample_id, kind }) => {
                failures.push(FailureEntry { candidate, sample_id, error: kind.to_string() })
            }
        }
    }

    let failed: BTreeSet<&CandidateId> = failures.iter().map(|f| &f.candidate).collect();
    for (id, spans) in outputs {
        if !failed.contains(&id) {
            pool.insert(id, spans)?;
        }
    }

    Ok(PoolRun { pool, annotations, unmatched, failures, attempted: jobs.len(), samples: annotated })
}

/// Run `n` jobs on up to `workers` threads; results come back in job order.
fn run_jobs<R: Send>(n: usize, workers: usize, job: impl Fn(usize) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..workers.min(n) {
            let tx = tx.clone();
            let (next, job) = (&next, &job);
            scope.spawn(move || loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                if j >= n {
                    break;
                }
                if tx.send((j, job(j))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut slots: Vec<Option<R>> = std::iter::repeat_with(|| None).take(n).collect();
    for (j, r) in rx {
        slots[j] = Some(r);
    }
    slots.into_iter().map(|r| r.expect("every job reports")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;
    use std::time::Duration;

    #[test]
    fn jobs_keep_order_and_respect_worker_bound() {
        let in_flight = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        let out = run_jobs(20, 3, |j| {
            let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            peak.fetch_max(now, Ordering::SeqCst);
            thread::sleep(Duration::from_millis(2));
            in_flight.fetch_sub(1, Ordering::SeqCst);
            j * 2
        });
        assert_eq!(out, (0..20).map(|j| j * 2).collect::<Vec<_>>());
        assert!(peak.load(Ordering::SeqCst) <= 3);
        assert!(run_jobs(0, 4, |j| j).is_empty());
    }
}
