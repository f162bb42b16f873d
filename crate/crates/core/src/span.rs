//! Token sequences, half-open token spans, and span-set algebra.
//!
//! Everything downstream works on token indices. Character offsets only
//! appear at the file boundary, where [`char_span_to_token_span`] snaps them
//! onto tokens.

use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// A whitespace-delimited token with its character range in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    /// Inclusive character index (Unicode scalar values, not bytes).
    pub char_start: usize,
    /// Exclusive character index.
    pub char_end: usize,
}

/// Source text (NFC-normalized) plus its token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedContent {
    text: String,
    tokens: Vec<Token>,
    // byte offset of every char boundary, including the end of the text
    char_bytes: Vec<usize>,
}

impl TokenizedContent {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Text length in characters.
    pub fn char_len(&self) -> usize {
        self.char_bytes.len() - 1
    }

    /// Slice the text by character offsets. Panics if the range is out of bounds.
    pub fn slice_chars(&self, start: usize, end: usize) -> &str {
        &self.text[self.char_bytes[start]..self.char_bytes[end]]
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }
}

/// Split `text` into maximal runs of non-whitespace characters after NFC
/// normalization. Offsets refer to the normalized text.
pub fn tokenize(text: &str) -> TokenizedContent {
    let text: String = text.nfc().collect();
    let mut char_bytes = Vec::with_capacity(text.len() + 1);
    let mut tokens = Vec::new();
    let mut open: Option<usize> = None;

    for (ci, (bi, ch)) in text.char_indices().enumerate() {
        char_bytes.push(bi);
        match (ch.is_whitespace(), open) {
            (false, None) => open = Some(ci),
            (true, Some(start)) => {
                tokens.push((start, ci));
                open = None;
            }
            _ => {}
        }
    }
    let n_chars = char_bytes.len();
    char_bytes.push(text.len());
    if let Some(start) = open {
        tokens.push((start, n_chars));
    }

    let tokens = tokens
        .into_iter()
        .map(|(char_start, char_end)| Token {
            surface: text[char_bytes[char_start]..char_bytes[char_end]].to_string(),
            char_start,
            char_end,
        })
        .collect();

    TokenizedContent { text, tokens, char_bytes }
}

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    start: usize,
    end: usize,
}

impl Span {
    /// Panics when `start >= end`; see [`Span::try_new`] for the fallible form.
    pub fn new(start: usize, end: usize) -> Self {
        Self::try_new(start, end).expect("span start must be < end")
    }

    pub fn try_new(start: usize, end: usize) -> Result<Self> {
        if start < end {
            Ok(Span { start, end })
        } else {
            Err(Error::input(format!("empty or inverted span ({start}, {end})")))
        }
    }

    pub fn start(self) -> usize {
        self.start
    }

    pub fn end(self) -> usize {
        self.end
    }

    pub fn len(self) -> usize {
        self.end - self.start
    }

    /// Always false; a span holds at least one token.
    pub fn is_empty(self) -> bool {
        false
    }

    /// True when `self` lies entirely within `outer` (equality included).
    pub fn nested_in(self, outer: Span) -> bool {
        self.start >= outer.start && self.end <= outer.end
    }

    pub fn overlaps(self, other: Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Number of shared token positions.
    pub fn intersection_len(self, other: Span) -> usize {
        self.end.min(other.end).saturating_sub(self.start.max(other.start))
    }

    pub fn tokens(self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.start, self.end)
    }
}

impl TryFrom<(usize, usize)> for Span {
    type Error = Error;

    fn try_from((start, end): (usize, usize)) -> Result<Self> {
        Span::try_new(start, end)
    }
}

impl From<Span> for (usize, usize) {
    fn from(span: Span) -> Self {
        (span.start, span.end)
    }
}

/// Sorted, pairwise non-overlapping spans. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct SpanSet {
    spans: Vec<Span>,
}

impl SpanSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sort `raw` and check it against a content of `n_tokens` tokens.
    pub fn validate(n_tokens: usize, raw: impl IntoIterator<Item = Span>) -> Result<Self> {
        let mut spans: Vec<Span> = raw.into_iter().collect();
        spans.sort_unstable();
        if let Some(&span) = spans.iter().find(|s| s.end > n_tokens) {
            return Err(Error::Bounds { span, n_tokens });
        }
        Self::from_sorted(spans)
    }

    /// Build from spans without a token-count bound (still sorted and checked
    /// for overlap). Used when the content length is not known yet.
    pub fn from_spans(raw: impl IntoIterator<Item = Span>) -> Result<Self> {
        let mut spans: Vec<Span> = raw.into_iter().collect();
        spans.sort_unstable();
        Self::from_sorted(spans)
    }

    fn from_sorted(spans: Vec<Span>) -> Result<Self> {
        if let Some(w) = spans.windows(2).find(|w| w[0].end > w[1].start) {
            return Err(Error::Overlap { first: w[0], second: w[1] });
        }
        Ok(SpanSet { spans })
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Span> {
        self.spans.iter()
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn contains(&self, span: Span) -> bool {
        self.spans.binary_search(&span).is_ok()
    }

    /// Highlighted token indices, ascending.
    pub fn token_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().flat_map(|s| s.tokens())
    }

    pub fn covered_tokens(&self) -> usize {
        self.spans.iter().map(|s| s.len()).sum()
    }

    /// Exclusive end of the last span, 0 when empty.
    pub fn max_end(&self) -> usize {
        self.spans.last().map_or(0, |s| s.end)
    }
}

impl<'a> IntoIterator for &'a SpanSet {
    type Item = &'a Span;
    type IntoIter = std::slice::Iter<'a, Span>;

    fn into_iter(self) -> Self::IntoIter {
        self.spans.iter()
    }
}

impl<'de> Deserialize<'de> for SpanSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let spans = Vec::<Span>::deserialize(deserializer)?;
        SpanSet::from_spans(spans).map_err(serde::de::Error::custom)
    }
}

/// Minimal token span covering every token that intersects the character
/// range `[char_start, char_end)`, or `None` when the range only covers
/// whitespace.
pub fn char_span_to_token_span(content: &TokenizedContent, char_start: usize, char_end: usize) -> Result<Option<Span>> {
    if char_start >= char_end || char_end > content.char_len() {
        return Err(Error::Range { start: char_start, end: char_end, len: content.char_len() });
    }
    let tokens = content.tokens();
    // first token ending after char_start, then extend while tokens start before char_end
    let first = tokens.partition_point(|t| t.char_end <= char_start);
    let last = tokens.partition_point(|t| t.char_start < char_end);
    Ok((first < last).then(|| Span::new(first, last)))
}

/// Sort and validate raw spans against `content`.
pub fn validate_span_set(content: &TokenizedContent, raw: impl IntoIterator<Item = Span>) -> Result<SpanSet> {
    SpanSet::validate(content.len(), raw)
}

/// Union of several annotations of the same content. Groups of spans linked
/// by genuine token overlap collapse into their covering span; spans that
/// merely touch (`a.end == b.start`) stay separate.
pub fn merge_union<'a>(sets: impl IntoIterator<Item = &'a SpanSet>) -> SpanSet {
    let mut all: Vec<Span> = sets.into_iter().flat_map(|s| s.spans.iter().copied()).collect();
    all.sort_unstable();

    let mut merged: Vec<Span> = Vec::with_capacity(all.len());
    for span in all {
        match merged.last_mut() {
            Some(cur) if span.start < cur.end => cur.end = cur.end.max(span.end),
            _ => merged.push(span),
        }
    }
    SpanSet { spans: merged }
}

/// The tokens a span covers, in order.
pub fn span_tokens(content: &TokenizedContent, span: Span) -> Result<&[Token]> {
    content.tokens.get(span.tokens()).ok_or(Error::Bounds { span, n_tokens: content.len() })
}
