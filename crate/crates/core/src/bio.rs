//! BIO tagging: span sets ⇄ per-token tags, entity-level tag metrics and
//! a CoNLL-style reader/writer.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::harmonic_mean;
use crate::span::{Span, SpanSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    B,
    I,
    O,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::B => "B",
            Tag::I => "I",
            Tag::O => "O",
        })
    }
}

impl FromStr for Tag {
    type Err = Error;

    /// Accepts bare `B`/`I`/`O` and typed forms such as `B-TARGET`.
    fn from_str(s: &str) -> Result<Self> {
        let head = s.split_once('-').map_or(s, |(h, _)| h);
        match head {
            "B" => Ok(Tag::B),
            "I" => Ok(Tag::I),
            "O" if s == "O" => Ok(Tag::O),
            _ => Err(Error::input(format!("unknown BIO tag {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagSequence(pub Vec<Tag>);

impl TagSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }
}

impl FromIterator<Tag> for TagSequence {
    fn from_iter<T: IntoIterator<Item = Tag>>(iter: T) -> Self {
        TagSequence(iter.into_iter().collect())
    }
}

/// Tag `n_tokens` positions: span starts get `B`, the rest of each span `I`.
pub fn encode_bio(n_tokens: usize, spans: &SpanSet) -> Result<TagSequence> {
    if spans.max_end() > n_tokens {
        let span = *spans.spans().last().unwrap();
        return Err(Error::Bounds { span, n_tokens });
    }
    let mut tags = vec![Tag::O; n_tokens];
    for span in spans {
        tags[span.start()] = Tag::B;
        tags[span.start() + 1..span.end()].fill(Tag::I);
    }
    Ok(TagSequence(tags))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub spans: SpanSet,
    /// Positions of orphan `I` tags that were read as `B`.
    pub repairs: Vec<usize>,
}

/// Read maximal `B I*` runs back into spans. An `I` that follows `O` (or
/// starts the sequence) opens a new span.
pub fn decode_bio(tags: &TagSequence) -> Decoded {
    let mut spans = Vec::new();
    let mut repairs = Vec::new();
    let mut open: Option<usize> = None;
    for (i, tag) in tags.0.iter().enumerate() {
        match (tag, open) {
            (Tag::B, Some(start)) => {
                spans.push(Span::new(start, i));
                open = Some(i);
            }
            (Tag::B, None) => open = Some(i),
            (Tag::I, None) => {
                repairs.push(i);
                open = Some(i);
            }
            (Tag::I, Some(_)) => {}
            (Tag::O, Some(start)) => {
                spans.push(Span::new(start, i));
                open = None;
            }
            (Tag::O, None) => {}
        }
    }
    if let Some(start) = open {
        spans.push(Span::new(start, tags.len()));
    }
    Decoded { spans: SpanSet::validate(tags.len(), spans).expect("decoded runs are disjoint"), repairs }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TagMetrics {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
}

/// Raw counts behind [`TagMetrics`]; add them up to evaluate a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TagCounts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
    pub matching_tags: usize,
    pub positions: usize,
}

impl TagCounts {
    pub fn of(pred: &TagSequence, gold: &TagSequence) -> Result<Self> {
        if pred.len() != gold.len() {
            return Err(Error::input(format!(
                "tag sequences differ in length: predicted {} vs gold {}",
                pred.len(),
                gold.len()
            )));
        }
        let p = decode_bio(pred).spans;
        let g = decode_bio(gold).spans;
        Ok(TagCounts {
            correct: p.iter().filter(|s| g.contains(**s)).count(),
            predicted: p.len(),
            gold: g.len(),
            matching_tags: pred.0.iter().zip(&gold.0).filter(|(a, b)| a == b).count(),
            positions: pred.len(),
        })
    }

    pub fn add(&mut self, other: TagCounts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
        self.matching_tags += other.matching_tags;
        self.positions += other.positions;
    }

    /// Empty denominators score 1.
    pub fn metrics(&self) -> TagMetrics {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.correct, self.predicted);
        let recall = ratio(self.correct, self.gold);
        TagMetrics {
            f1: harmonic_mean(precision, recall),
            precision,
            recall,
            accuracy: ratio(self.matching_tags, self.positions),
        }
    }
}

/// Exact-boundary entity precision/recall/F1 plus token-level accuracy.
pub fn tag_metrics(pred: &TagSequence, gold: &TagSequence) -> Result<TagMetrics> {
    Ok(TagCounts::of(pred, gold)?.metrics())
}

/// Pooled counts over a corpus of `(pred, gold)` pairs.
pub fn corpus_tag_metrics<'a>(
    pairs: impl IntoIterator<Item = (&'a TagSequence, &'a TagSequence)>,
) -> Result<TagMetrics> {
    let mut total = TagCounts::default();
    for (pred, gold) in pairs {
        total.add(TagCounts::of(pred, gold)?);
    }
    Ok(total.metrics())
}

/// One CoNLL block: optional `# key = value` metadata lines, then one
/// `token<TAB>tag` line per token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConllSample {
    pub meta: Vec<(String, String)>,
    pub tokens: Vec<String>,
    pub tags: TagSequence,
}

impl ConllSample {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Parse CoNLL text. Blank lines separate samples; `path` is only used in
/// error messages.
pub fn read_conll<R: BufRead>(input: R, path: &str) -> Result<Vec<ConllSample>> {
    let mut samples = Vec::new();
    let mut cur = ConllSample::default();
    let flush = |cur: &mut ConllSample, samples: &mut Vec<ConllSample>| {
        if !cur.tokens.is_empty() || !cur.meta.is_empty() {
            samples.push(std::mem::take(cur));
        }
    };
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let err = |message: String| Error::Parse { path: path.into(), line: i + 1, message };
        if line.is_empty() {
            flush(&mut cur, &mut samples);
        } else if let Some(rest) = line.strip_prefix("# ") {
            if !cur.tokens.is_empty() {
                return Err(err("metadata line inside a sample".into()));
            }
            let (k, v) =
                rest.split_once(" = ").ok_or_else(|| err(format!("metadata must be `# key = value`, got {line:?}")))?;
            cur.meta.push((k.to_string(), v.to_string()));
        } else {
            let (token, tag) =
                line.split_once('\t').ok_or_else(|| err(format!("expected token<TAB>tag, got {line:?}")))?;
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(err(format!("invalid token {token:?}")));
            }
            cur.tokens.push(token.to_string());
            cur.tags.0.push(tag.parse().map_err(|e: Error| err(e.to_string()))?);
        }
    }
    flush(&mut cur, &mut samples);
    Ok(samples)
}

/// Write samples separated by single blank lines. Well-formed input read by
/// [`read_conll`] is reproduced byte for byte.
pub fn write_conll<W: Write>(mut out: W, samples: &[ConllSample]) -> std::io::Result<()> {
    for (n, sample) in samples.iter().enumerate() {
        if n > 0 {
            writeln!(out)?;
        }
        for (k, v) in &sample.meta {
            writeln!(out, "# {k} = {v}")?;
        }
        for (token, tag) in sample.tokens.iter().zip(&sample.tags.0) {
            writeln!(out, "{token}\t{tag}")?;
        }
    }
    Ok(())
}
