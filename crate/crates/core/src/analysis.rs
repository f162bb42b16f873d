//! Structural error analysis of span predictions: boundary errors and
//! span-count discrepancies over the samples a model got wrong.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::bio::{encode_bio, tag_metrics};
use crate::error::{Error, Result};
use crate::span::{Span, SpanSet};

/// Predicted/gold pairs that share tokens but disagree on a boundary.
pub fn boundary_errors(pred: &SpanSet, gold: &SpanSet) -> Vec<(Span, Span)> {
    let mut pairs = Vec::new();
    for &p in pred {
        for &g in gold.iter().skip_while(|g| g.end() <= p.start()) {
            if g.start() >= p.end() {
                break;
            }
            if p != g {
                pairs.push((p, g));
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountDiscrepancy {
    Over,
    Under,
    Equal,
}

impl fmt::Display for CountDiscrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountDiscrepancy::Over => "over",
            CountDiscrepancy::Under => "under",
            CountDiscrepancy::Equal => "equal",
        })
    }
}

pub fn count_discrepancy(pred: &SpanSet, gold: &SpanSet) -> CountDiscrepancy {
    match pred.len().cmp(&gold.len()) {
        std::cmp::Ordering::Greater => CountDiscrepancy::Over,
        std::cmp::Ordering::Less => CountDiscrepancy::Under,
        std::cmp::Ordering::Equal => CountDiscrepancy::Equal,
    }
}

/// One sample to analyse.
#[derive(Debug, Clone, Copy)]
pub struct Prediction<'a> {
    pub pred: &'a SpanSet,
    pub gold: &'a SpanSet,
    pub n_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n_samples: usize,
    /// Samples whose entity-level F1 is below 1.
    pub n_failed: usize,
    pub no_failures: bool,
    /// Among failed samples, share with at least one boundary error.
    pub boundary_rate: f64,
    /// The same count over all samples.
    pub boundary_rate_all: f64,
    pub count_over: f64,
    pub count_under: f64,
    pub count_equal: f64,
    /// Free text for qualitative categories (obfuscation, implicit
    /// reference, dataset noise) that need a human reader.
    pub notes: String,
}

impl ErrorReport {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "metric\tvalue")?;
        writeln!(out, "n_samples\t{}", self.n_samples)?;
        writeln!(out, "n_failed\t{}", self.n_failed)?;
        writeln!(out, "no_failures\t{}", self.no_failures)?;
        writeln!(out, "boundary_rate\t{:.6}", self.boundary_rate)?;
        writeln!(out, "boundary_rate_all\t{:.6}", self.boundary_rate_all)?;
        writeln!(out, "count_over\t{:.6}", self.count_over)?;
        writeln!(out, "count_under\t{:.6}", self.count_under)?;
        writeln!(out, "count_equal\t{:.6}", self.count_equal)?;
        writeln!(out, "notes\t{}", self.notes.replace(['\t', '\n'], " "))
    }
}

impl fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples analysed: {}", self.n_samples)?;
        if self.no_failures {
            return writeln!(f, "no failures: every sample predicted exactly");
        }
        let pct = |x: f64| 100.0 * x;
        writeln!(f, "failed samples: {}", self.n_failed)?;
        writeln!(
            f,
            "boundary errors: {:.1}% of failed samples ({:.1}% of all samples)",
            pct(self.boundary_rate),
            pct(self.boundary_rate_all)
        )?;
        writeln!(
            f,
            "span count: {:.1}% too many, {:.1}% too few, {:.1}% right number",
            pct(self.count_over),
            pct(self.count_under),
            pct(self.count_equal)
        )?;
        if !self.notes.is_empty() {
            writeln!(f, "notes: {}", self.notes)?;
        }
        Ok(())
    }
}

/// Aggregate boundary and span-count errors over failed samples.
pub fn error_report<'a>(samples: impl IntoIterator<Item = Prediction<'a>>) -> Result<ErrorReport> {
    let (mut n, mut failed, mut boundary) = (0usize, 0usize, 0usize);
    let mut counts = [0usize; 3];
    for sample in samples {
        n += 1;
        let pred = encode_bio(sample.n_tokens, sample.pred)?;
        let gold = encode_bio(sample.n_tokens, sample.gold)?;
        if tag_metrics(&pred, &gold)?.f1 >= 1.0 {
            continue;
        }
        failed += 1;
        if !boundary_errors(sample.pred, sample.gold).is_empty() {
            boundary += 1;
        }
        counts[match count_discrepancy(sample.pred, sample.gold) {
            CountDiscrepancy::Over => 0,
            CountDiscrepancy::Under => 1,
            CountDiscrepancy::Equal => 2,
        }] += 1;
    }
    if n == 0 {
        return Err(Error::input("error report needs at least one sample"));
    }
    let over_failed = |k: usize| if failed == 0 { 0.0 } else { k as f64 / failed as f64 };
    Ok(ErrorReport {
        n_samples: n,
        n_failed: failed,
        no_failures: failed == 0,
        boundary_rate: over_failed(boundary),
        boundary_rate_all: boundary as f64 / n as f64,
        count_over: over_failed(counts[0]),
        count_under: over_failed(counts[1]),
        count_equal: over_failed(counts[2]),
        notes: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(spans: &[(usize, usize)]) -> SpanSet {
        SpanSet::from_spans(spans.iter().map(|&(s, e)| Span::new(s, e))).unwrap()
    }

    #[test]
    fn boundary_examples() {
        let g = set(&[(1, 4)]);
        assert!(boundary_errors(&g, &g).is_empty());
        assert_eq!(boundary_errors(&set(&[(1, 2)]), &g), vec![(Span::new(1, 2), Span::new(1, 4))]);
        assert!(boundary_errors(&set(&[(5, 6)]), &g).is_empty());
        // one prediction straddling two gold spans
        let pairs = boundary_errors(&set(&[(1, 5)]), &set(&[(0, 2), (3, 4), (5, 6)]));
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn count_examples() {
        let one = set(&[(0, 1)]);
        assert_eq!(count_discrepancy(&one, &one), CountDiscrepancy::Equal);
        assert_eq!(count_discrepancy(&set(&[(0, 1), (2, 3), (4, 5)]), &set(&[(0, 1), (2, 3)])), CountDiscrepancy::Over);
        assert_eq!(count_discrepancy(&SpanSet::empty(), &one), CountDiscrepancy::Under);
    }

    #[test]
    fn perfect_predictions_report_no_failures() {
        let g = set(&[(0, 2)]);
        let r = error_report([Prediction { pred: &g, gold: &g, n_tokens: 3 }]).unwrap();
        assert!(r.no_failures);
        assert_eq!((r.n_failed, r.boundary_rate, r.count_over), (0, 0.0, 0.0));
        assert!(r.to_string().contains("no failures"));
        assert!(error_report(std::iter::empty()).is_err());
    }

    #[test]
    fn tsv_layout() {
        let g = set(&[(0, 2)]);
        let p = set(&[(0, 1)]);
        let r = error_report([Prediction { pred: &p, gold: &g, n_tokens: 3 }]).unwrap();
        let mut buf = Vec::new();
        r.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("metric\tvalue\nn_samples\t1\nn_failed\t1\n"));
        assert!(text.contains("boundary_rate\t1.000000\n"));
    }
}
