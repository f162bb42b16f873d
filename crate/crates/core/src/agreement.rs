//! Pairwise inter-annotator agreement over highlighted tokens.
//!
//! [`dsc`] compares token positions. [`lcs_agreement`] compares the
//! sequence of highlighted token surfaces, so a repeated word can match
//! across positions.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::span::{SpanSet, TokenizedContent};

/// Annotator id → sample id → spans.
pub type Annotations = BTreeMap<String, BTreeMap<String, SpanSet>>;

fn shared_tokens(a: &SpanSet, b: &SpanSet) -> usize {
    let (a, b) = (a.spans(), b.spans());
    let (mut i, mut j, mut shared) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        shared += a[i].intersection_len(b[j]);
        if a[i].end() <= b[j].end() {
            i += 1;
        } else {
            j += 1;
        }
    }
    shared
}

/// Dice coefficient `2|A∩B| / (|A|+|B|)` over highlighted token indices;
/// 1 when neither side highlights anything.
pub fn dsc(a: &SpanSet, b: &SpanSet) -> f64 {
    let total = a.covered_tokens() + b.covered_tokens();
    if total == 0 {
        return 1.0;
    }
    2.0 * shared_tokens(a, b) as f64 / total as f64
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// `2·LCS / (|A|+|B|)` between the two highlighted surface sequences (spans
/// concatenated in document order); 1 when both are empty.
pub fn lcs_agreement(a: &SpanSet, b: &SpanSet, content: &TokenizedContent) -> f64 {
    let surfaces =
        |s: &SpanSet| -> Vec<&str> { s.token_indices().map(|i| content.tokens()[i].surface.as_str()).collect() };
    let (sa, sb) = (surfaces(a), surfaces(b));
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    2.0 * lcs_len(&sa, &sb) as f64 / (sa.len() + sb.len()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    /// Annotator ids, lexicographically ordered.
    pub pair: (String, String),
    pub dsc: f64,
    pub lcs: f64,
    pub n_samples: usize,
}

/// Mean DSC and LCS agreement for every unordered pair of annotators.
/// All annotators must cover the same sample ids, and every sample needs
/// an entry in `contents`.
pub fn pairwise_agreement(
    annotations: &Annotations,
    contents: &BTreeMap<String, TokenizedContent>,
) -> Result<Vec<AgreementReport>> {
    if annotations.len() < 2 {
        return Err(Error::input("agreement needs at least two annotators"));
    }
    let ids = check_coverage(annotations)?;
    if ids.is_empty() {
        return Err(Error::input("annotators share no samples"));
    }
    for id in &ids {
        let content = contents.get(*id).ok_or_else(|| Error::validation(*id, "no content for sample"))?;
        for spans in annotations.values() {
            if spans[*id].max_end() > content.len() {
                return Err(Error::validation(*id, "span exceeds content length"));
            }
        }
    }

    let names: Vec<&String> = annotations.keys().collect();
    let mut reports = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (sa, sb) = (&annotations[*a], &annotations[*b]);
            let (mut d, mut l) = (0.0, 0.0);
            for id in &ids {
                d += dsc(&sa[*id], &sb[*id]);
                l += lcs_agreement(&sa[*id], &sb[*id], &contents[*id]);
            }
            let n = ids.len();
            reports.push(AgreementReport {
                pair: ((*a).clone(), (*b).clone()),
                dsc: d / n as f64,
                lcs: l / n as f64,
                n_samples: n,
            });
        }
    }
    Ok(reports)
}

/// Sample ids shared by every annotator; errors if any annotator's set differs.
pub(crate) fn check_coverage(annotations: &Annotations) -> Result<Vec<&str>> {
    let mut iter = annotations.iter();
    let Some((first_name, first)) = iter.next() else {
        return Ok(Vec::new());
    };
    for (name, samples) in iter {
        if samples.keys().ne(first.keys()) {
            let missing = first
                .keys()
                .find(|k| !samples.contains_key(*k))
                .map(|k| (name, k))
                .or_else(|| samples.keys().find(|k| !first.contains_key(*k)).map(|k| (first_name, k)));
            let detail = match missing {
                Some((who, id)) => format!("annotator {who:?} has no annotation for sample {id:?}"),
                None => "annotators cover different samples".to_string(),
            };
            return Err(Error::input(detail));
        }
    }
    Ok(first.keys().map(String::as_str).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::{tokenize, Span};

    fn set(spans: &[(usize, usize)]) -> SpanSet {
        SpanSet::from_spans(spans.iter().map(|&(s, e)| Span::new(s, e))).unwrap()
    }

    #[test]
    fn dsc_examples() {
        let a = set(&[(1, 4)]);
        assert_eq!(dsc(&a, &a), 1.0);
        assert!((dsc(&a, &set(&[(2, 4)])) - 0.8).abs() < 1e-12);
        assert_eq!(dsc(&a, &set(&[(5, 6)])), 0.0);
        assert_eq!(dsc(&SpanSet::empty(), &SpanSet::empty()), 1.0);
        // intersections across several spans on both sides
        assert!((dsc(&set(&[(0, 2), (3, 6)]), &set(&[(1, 4), (5, 7)])) - 6.0 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn lcs_examples() {
        let c = tokenize("the horrible purple person left");
        let a = set(&[(1, 4)]);
        assert_eq!(lcs_agreement(&a, &a, &c), 1.0);
        let b = set(&[(2, 5)]);
        assert!((lcs_agreement(&a, &b, &c) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(lcs_agreement(&set(&[(0, 1)]), &set(&[(4, 5)]), &c), 0.0);
    }

    #[test]
    fn lcs_matches_repeated_surfaces() {
        let c = tokenize("they they said");
        // different positions, same surface
        assert_eq!(lcs_agreement(&set(&[(0, 1)]), &set(&[(1, 2)]), &c), 1.0);
        assert_eq!(dsc(&set(&[(0, 1)]), &set(&[(1, 2)])), 0.0);
    }

    #[test]
    fn pairwise_means() {
        let contents: BTreeMap<_, _> =
            [("s1", "a b c d e"), ("s2", "a b c d e")].into_iter().map(|(k, v)| (k.to_string(), tokenize(v))).collect();
        let mut ann = Annotations::new();
        ann.insert("x".into(), [("s1".into(), set(&[(1, 4)])), ("s2".into(), set(&[(0, 4)]))].into());
        // s1: dsc 0.8; s2: 2*2/(4+2) = 2/3
        ann.insert("y".into(), [("s1".into(), set(&[(2, 4)])), ("s2".into(), set(&[(0, 2)]))].into());
        let reports = pairwise_agreement(&ann, &contents).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].pair, ("x".to_string(), "y".to_string()));
        assert!((reports[0].dsc - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(reports[0].n_samples, 2);
    }

    #[test]
    fn pairwise_rejects_mismatched_coverage() {
        let contents: BTreeMap<_, _> = [("s1".to_string(), tokenize("a b"))].into();
        let mut ann = Annotations::new();
        ann.insert("x".into(), [("s1".into(), set(&[(0, 1)]))].into());
        ann.insert("y".into(), BTreeMap::new());
        assert!(matches!(pairwise_agreement(&ann, &contents), Err(Error::Input(_))));

        let mut single = Annotations::new();
        single.insert("x".into(), [("s1".into(), set(&[(0, 1)]))].into());
        assert!(pairwise_agreement(&single, &contents).is_err());
    }
}
