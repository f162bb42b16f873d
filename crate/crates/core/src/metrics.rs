//! Partial-match span scores (PM_r / PM_p) and the F1_M family built on them.
//!
//! A gold span earns recall credit from output spans nested inside it, in
//! proportion to the tokens they cover; output spans earn precision credit
//! symmetrically. An output that straddles a gold boundary earns nothing.
//! [`MatchMode::Coverage`] additionally gives full credit to a span that lies
//! wholly inside a span from the other side.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::span::{Span, SpanSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Credit only for exact matches and for spans of the other side nested
    /// inside the scored span.
    #[default]
    Strict,
    /// Strict, plus full credit when the scored span is nested inside a span
    /// of the other side.
    Coverage,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Strict => "strict",
            MatchMode::Coverage => "coverage",
        })
    }
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(MatchMode::Strict),
            "coverage" => Ok(MatchMode::Coverage),
            other => Err(Error::input(format!("unknown match mode {other:?} (expected strict or coverage)"))),
        }
    }
}

/// Harmonic mean with the `0/0 = 0` convention.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Score `target` against the spans on the other side. Shared by both
/// directions: the denominator is always `|target|`.
fn partial_match(target: Span, others: &SpanSet, mode: MatchMode) -> f64 {
    let others = others.spans();
    let first = others.partition_point(|o| o.end() <= target.start());
    let mut nested_tokens = 0;
    for &other in others[first..].iter().take_while(|o| o.start() < target.end()) {
        if other == target {
            return 1.0;
        }
        if mode == MatchMode::Coverage && target.nested_in(other) {
            return 1.0;
        }
        if other.nested_in(target) {
            nested_tokens += other.len();
        }
    }
    nested_tokens as f64 / target.len() as f64
}

/// Fraction of `gold_span` covered by output spans nested inside it.
pub fn pm_recall(gold_span: Span, outputs: &SpanSet, mode: MatchMode) -> f64 {
    partial_match(gold_span, outputs, mode)
}

/// Fraction of `output_span` covered by gold spans nested inside it.
pub fn pm_precision(output_span: Span, golds: &SpanSet, mode: MatchMode) -> f64 {
    partial_match(output_span, golds, mode)
}

/// Per-sample F1_M breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub per_gold: Vec<(Span, f64)>,
    pub per_output: Vec<(Span, f64)>,
    pub rec_m: f64,
    pub prec_m: f64,
    pub f1_m: f64,
    pub mode: MatchMode,
}

fn mean_or_one(scores: &[(Span, f64)]) -> f64 {
    if scores.is_empty() {
        1.0
    } else {
        scores.iter().map(|(_, s)| s).sum::<f64>() / scores.len() as f64
    }
}

/// Score one sample. An empty gold set gives `rec_m = 1`, an empty output
/// set gives `prec_m = 1`.
pub fn f1_m(gold: &SpanSet, output: &SpanSet, mode: MatchMode) -> MatchReport {
    let per_gold: Vec<_> = gold.iter().map(|&g| (g, pm_recall(g, output, mode))).collect();
    let per_output: Vec<_> = output.iter().map(|&o| (o, pm_precision(o, gold, mode))).collect();
    let rec_m = mean_or_one(&per_gold);
    let prec_m = mean_or_one(&per_output);
    MatchReport { per_gold, per_output, rec_m, prec_m, f1_m: harmonic_mean(rec_m, prec_m), mode }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Mean of per-sample scores.
    #[default]
    Macro,
    /// PM sums pooled over the corpus before dividing.
    Micro,
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Averaging::Macro => "macro",
            Averaging::Micro => "micro",
        })
    }
}

/// Corpus-level F1_M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageReport {
    pub n_samples: usize,
    pub f1_m: f64,
    pub rec_m: f64,
    pub prec_m: f64,
    pub mode: MatchMode,
    pub averaging: Averaging,
}

/// Mean of per-sample F1_M (and of Rec_M, Prec_M) over `(gold, output)` pairs.
pub fn avg_f1_m<'a, I>(samples: I, mode: MatchMode) -> Result<AverageReport>
where
    I: IntoIterator<Item = (&'a SpanSet, &'a SpanSet)>,
{
    let (mut n, mut f1, mut rec, mut prec) = (0usize, 0.0, 0.0, 0.0);
    for (gold, output) in samples {
        let report = f1_m(gold, output, mode);
        n += 1;
        f1 += report.f1_m;
        rec += report.rec_m;
        prec += report.prec_m;
    }
    if n == 0 {
        return Err(Error::input("cannot average F1_M over zero samples"));
    }
    let n_f = n as f64;
    Ok(AverageReport {
        n_samples: n,
        f1_m: f1 / n_f,
        rec_m: rec / n_f,
        prec_m: prec / n_f,
        mode,
        averaging: Averaging::Macro,
    })
}

/// Micro-averaged variant: every gold span and every output span in the
/// corpus carries equal weight.
pub fn micro_f1_m<'a, I>(samples: I, mode: MatchMode) -> Result<AverageReport>
where
    I: IntoIterator<Item = (&'a SpanSet, &'a SpanSet)>,
{
    let mut n = 0usize;
    let (mut rec_sum, mut n_gold, mut prec_sum, mut n_out) = (0.0, 0usize, 0.0, 0usize);
    for (gold, output) in samples {
        let report = f1_m(gold, output, mode);
        n += 1;
        rec_sum += report.per_gold.iter().map(|(_, s)| s).sum::<f64>();
        prec_sum += report.per_output.iter().map(|(_, s)| s).sum::<f64>();
        n_gold += gold.len();
        n_out += output.len();
    }
    if n == 0 {
        return Err(Error::input("cannot average F1_M over zero samples"));
    }
    let rec_m = if n_gold == 0 { 1.0 } else { rec_sum / n_gold as f64 };
    let prec_m = if n_out == 0 { 1.0 } else { prec_sum / n_out as f64 };
    Ok(AverageReport {
        n_samples: n,
        f1_m: harmonic_mean(rec_m, prec_m),
        rec_m,
        prec_m,
        mode,
        averaging: Averaging::Micro,
    })
}

/// Dispatch on [`Averaging`].
pub fn average<'a, I>(samples: I, mode: MatchMode, averaging: Averaging) -> Result<AverageReport>
where
    I: IntoIterator<Item = (&'a SpanSet, &'a SpanSet)>,
{
    match averaging {
        Averaging::Macro => avg_f1_m(samples, mode),
        Averaging::Micro => micro_f1_m(samples, mode),
    }
}
