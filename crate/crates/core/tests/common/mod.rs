#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use targetspan::span::{Span, SpanSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn set(spans: &[(usize, usize)]) -> SpanSet {
    SpanSet::from_spans(spans.iter().map(|&(s, e)| Span::new(s, e))).unwrap()
}

/// Up to `max_spans` disjoint spans (touching allowed) over `n` tokens.
pub fn random_set(rng: &mut ChaCha8Rng, n: usize, max_spans: usize) -> SpanSet {
    let want = rng.random_range(0..=max_spans);
    let mut picked: Vec<(usize, usize)> = Vec::new();
    for _ in 0..want * 4 {
        if picked.len() == want {
            break;
        }
        let start = rng.random_range(0..n);
        let len = rng.random_range(1..=(n - start).min(5));
        let end = start + len;
        if picked.iter().all(|&(s, e)| end <= s || start >= e) {
            picked.push((start, end));
        }
    }
    set(&picked)
}

/// Word-like text with `n` tokens and irregular whitespace.
pub fn random_text(rng: &mut ChaCha8Rng, n: usize) -> String {
    const WORDS: [&str; 8] = ["they", "piano", "Brains", "the", "purple", "café", "x", "songwriters'"];
    const GAPS: [&str; 4] = [" ", "  ", "\t", " \n "];
    let mut text = String::new();
    for i in 0..n {
        if i > 0 {
            text.push_str(GAPS[rng.random_range(0..GAPS.len())]);
        }
        text.push_str(WORDS[rng.random_range(0..WORDS.len())]);
    }
    text
}

/// Brute-force scorer working on explicit token sets, written without
/// reference to the sweep in the library.
pub mod oracle {
    use super::*;

    type Tokens = BTreeSet<usize>;

    fn tokens(set: &SpanSet) -> Vec<Tokens> {
        set.iter().map(|s| (s.start()..s.end()).collect()).collect()
    }

    fn score(target: &Tokens, others: &[Tokens], coverage: bool) -> f64 {
        if others.iter().any(|o| o == target) {
            return 1.0;
        }
        if coverage && others.iter().any(|o| target.is_subset(o)) {
            return 1.0;
        }
        others.iter().filter(|o| o.is_subset(target)).map(|o| o.len() as f64 / target.len() as f64).sum()
    }

    fn side(targets: &[Tokens], others: &[Tokens], coverage: bool) -> f64 {
        if targets.is_empty() {
            return 1.0;
        }
        targets.iter().map(|t| score(t, others, coverage)).sum::<f64>() / targets.len() as f64
    }

    /// (rec, prec, f1)
    pub fn f1_m(gold: &SpanSet, output: &SpanSet, coverage: bool) -> (f64, f64, f64) {
        let (g, o) = (tokens(gold), tokens(output));
        let rec = side(&g, &o, coverage);
        let prec = side(&o, &g, coverage);
        let f1 = if rec + prec == 0.0 { 0.0 } else { 2.0 * rec * prec / (rec + prec) };
        (rec, prec, f1)
    }
}
