//! Rank a pool of annotation systems (system × prompt) against aggregated
//! human annotations and pick the closest one.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::{check_coverage, Annotations};
use crate::error::{Error, Result};
use crate::metrics::{avg_f1_m, AverageReport, MatchMode};
use crate::span::{merge_union, SpanSet};

/// One annotation system: a model (or human) paired with a prompt.
/// Ordering is lexicographic on `(system, prompt)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidateId {
    pub system: String,
    pub prompt: String,
}

impl CandidateId {
    pub fn new(system: impl Into<String>, prompt: impl Into<String>) -> Self {
        CandidateId { system: system.into(), prompt: prompt.into() }
    }

    /// Parse the `system/prompt` label used in pool files. The split happens
    /// at the last `/`, so model names may themselves contain slashes.
    pub fn from_label(label: &str) -> Option<Self> {
        let (system, prompt) = label.rsplit_once('/')?;
        (!system.is_empty() && !prompt.is_empty()).then(|| CandidateId::new(system, prompt))
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.system, self.prompt)
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.system, self.prompt)
    }
}

/// Sample id → spans.
pub type SampleSpans = BTreeMap<String, SpanSet>;

/// Candidate outputs plus the gold they are ranked against.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    gold: SampleSpans,
    candidates: BTreeMap<CandidateId, SampleSpans>,
}

#[derive(Serialize)]
struct CandidateEntry<'a> {
    id: &'a CandidateId,
    outputs: &'a SampleSpans,
}

impl Serialize for CandidatePool {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            gold: &'a SampleSpans,
            candidates: Vec<CandidateEntry<'a>>,
        }
        Repr {
            gold: &self.gold,
            candidates: self.candidates.iter().map(|(id, outputs)| CandidateEntry { id, outputs }).collect(),
        }
        .serialize(serializer)
    }
}

impl CandidatePool {
    pub fn new(gold: SampleSpans) -> Self {
        CandidatePool { gold, candidates: BTreeMap::new() }
    }

    /// Gold built as the union of several annotators' spans.
    pub fn from_annotators(annotations: &Annotations) -> Result<Self> {
        Ok(Self::new(aggregate(annotations)?))
    }

    /// Add a candidate. Its sample ids must equal the gold's exactly.
    pub fn insert(&mut self, id: CandidateId, outputs: SampleSpans) -> Result<()> {
        if self.candidates.contains_key(&id) {
            return Err(Error::input(format!("duplicate candidate {id}")));
        }
        if let Some(missing) = self.gold.keys().find(|k| !outputs.contains_key(*k)) {
            return Err(Error::input(format!("candidate {id} has no output for sample {missing:?}")));
        }
        if let Some(extra) = outputs.keys().find(|k| !self.gold.contains_key(*k)) {
            return Err(Error::input(format!("candidate {id} has output for unknown sample {extra:?}")));
        }
        self.candidates.insert(id, outputs);
        Ok(())
    }

    pub fn gold(&self) -> &SampleSpans {
        &self.gold
    }

    pub fn candidates(&self) -> &BTreeMap<CandidateId, SampleSpans> {
        &self.candidates
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub id: CandidateId,
    pub f1_m: f64,
    /// Absent when the ranking was built from bare scores.
    pub rec_m: Option<f64>,
    pub prec_m: Option<f64>,
}

/// Candidates in descending score order; ties go to the lexicographically
/// smaller `(system, prompt)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCandidates {
    entries: Vec<RankedEntry>,
}

impl RankedCandidates {
    fn sorted(mut entries: Vec<RankedEntry>) -> Self {
        entries.sort_by(|a, b| b.f1_m.total_cmp(&a.f1_m).then_with(|| a.id.cmp(&b.id)));
        RankedCandidates { entries }
    }

    /// Rank precomputed scores.
    pub fn from_scores(scores: impl IntoIterator<Item = (CandidateId, f64)>) -> Self {
        Self::sorted(scores.into_iter().map(|(id, f1_m)| RankedEntry { id, f1_m, rec_m: None, prec_m: None }).collect())
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Write `system, prompt, f1_m, rec_m, prec_m` as TSV with a header row.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "system\tprompt\tf1_m\trec_m\tprec_m")?;
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        for e in &self.entries {
            writeln!(out, "{}\t{}\t{:.6}\t{}\t{}", e.id.system, e.id.prompt, e.f1_m, opt(e.rec_m), opt(e.prec_m))?;
        }
        Ok(())
    }

    /// Read a score table with at least `system`, `prompt` and `f1_m`
    /// columns (a ranking TSV qualifies). Rows are re-ranked.
    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse { path: "<scores>".into(), line, message };
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io("<scores>", e))?,
            None => return Err(Error::input("score table is empty")),
        };
        let cols: Vec<&str> = header.split('\t').collect();
        let col = |name: &str| {
            cols.iter().position(|c| *c == name).ok_or_else(|| parse_err(1, format!("missing column {name:?}")))
        };
        let (ci_sys, ci_prompt, ci_f1) = (col("system")?, col("prompt")?, col("f1_m")?);
        let ci_rec = cols.iter().position(|c| *c == "rec_m");
        let ci_prec = cols.iter().position(|c| *c == "prec_m");

        let mut entries = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io("<scores>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let get = |ci: usize| {
                fields.get(ci).copied().ok_or_else(|| parse_err(i + 1, format!("expected {} columns", cols.len())))
            };
            let num = |ci: usize| -> Result<f64> {
                let raw = get(ci)?;
                raw.parse::<f64>().map_err(|_| parse_err(i + 1, format!("not a number: {raw:?}")))
            };
            let opt = |ci: Option<usize>| -> Result<Option<f64>> {
                match ci {
                    Some(ci) if get(ci)? != "-" => num(ci).map(Some),
                    _ => Ok(None),
                }
            };
            entries.push(RankedEntry {
                id: CandidateId::new(get(ci_sys)?, get(ci_prompt)?),
                f1_m: num(ci_f1)?,
                rec_m: opt(ci_rec)?,
                prec_m: opt(ci_prec)?,
            });
        }
        Ok(Self::sorted(entries))
    }
}

/// Score every candidate with macro-averaged F1_M against the gold and
/// rank them.
pub fn rank_pool(pool: &CandidatePool, mode: MatchMode) -> Result<RankedCandidates> {
    if pool.is_empty() {
        return Err(Error::input("candidate pool is empty"));
    }
    if pool.gold.is_empty() {
        return Err(Error::input("candidate pool has no gold samples"));
    }
    let entries = pool
        .candidates
        .par_iter()
        .map(|(id, outputs)| {
            let report = score_against(&pool.gold, outputs, mode)?;
            Ok(RankedEntry {
                id: id.clone(),
                f1_m: report.f1_m,
                rec_m: Some(report.rec_m),
                prec_m: Some(report.prec_m),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedCandidates::sorted(entries))
}

fn score_against(gold: &SampleSpans, outputs: &SampleSpans, mode: MatchMode) -> Result<AverageReport> {
    avg_f1_m(gold.iter().map(|(id, g)| (g, &outputs[id])), mode)
}

/// The top-ranked candidate.
pub fn select_best(ranked: &RankedCandidates) -> Result<&CandidateId> {
    ranked.entries.first().map(|e| &e.id).ok_or_else(|| Error::input("cannot select from an empty ranking"))
}

/// Per-sample union of all annotators' spans.
pub fn aggregate(annotations: &Annotations) -> Result<SampleSpans> {
    let ids = check_coverage(annotations)?;
    Ok(ids.into_iter().map(|id| (id.to_string(), merge_union(annotations.values().map(|a| &a[id])))).collect())
}

/// Score each annotator against the union of all annotators, itself included.
pub fn annotator_vs_pool(annotations: &Annotations, mode: MatchMode) -> Result<BTreeMap<String, AverageReport>> {
    if annotations.is_empty() {
        return Err(Error::input("no annotators given"));
    }
    let gold = aggregate(annotations)?;
    if gold.is_empty() {
        return Err(Error::input("annotators share no samples"));
    }
    annotations.iter().map(|(name, spans)| Ok((name.clone(), score_against(&gold, spans, mode)?))).collect()
}
