//! Map quoted extractions in a model response back onto the source text.

use unicode_normalization::UnicodeNormalization;

use crate::span::{char_span_to_token_span, merge_union, Span, SpanSet, TokenizedContent};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located {
    pub extraction: String,
    pub char_start: usize,
    pub char_end: usize,
    pub span: Span,
    pub case_insensitive: bool,
    /// More than one occurrence was available.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    pub spans: SpanSet,
    pub located: Vec<Located>,
    pub unmatched: Vec<String>,
}

/// Quoted text of every response line that carries a quote pair
/// (`"…"` or `“…”`). Lines without quotes are ignored.
pub fn extractions(response: &str) -> Vec<String> {
    response
        .lines()
        .filter_map(|line| {
            let open = line.find(['"', '\u{201c}'])?;
            let after = open + line[open..].chars().next()?.len_utf8();
            let close = line.rfind(['"', '\u{201d}'])?;
            (close > open).then(|| line[after..close].trim().nfc().collect::<String>())
        })
        .filter(|s| !s.is_empty())
        .collect()
}

fn fold_eq(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

fn occurrences(hay: &[char], needle: &[char], case_insensitive: bool) -> Vec<usize> {
    if needle.len() > hay.len() {
        return Vec::new();
    }
    (0..=hay.len() - needle.len())
        .filter(|&i| {
            hay[i..i + needle.len()].iter().zip(needle).all(
                |(&h, &n)| {
                    if case_insensitive {
                        fold_eq(h, n)
                    } else {
                        h == n
                    }
                },
            )
        })
        .collect()
}

/// Locate every quoted extraction in `content`: exact match first, then
/// case-insensitive; the leftmost occurrence not overlapping an earlier
/// extraction wins. Located ranges snap to tokens and are unioned.
/// Extractions that do not occur in the text are returned unmatched.
pub fn align_response(response: &str, content: &TokenizedContent) -> Alignment {
    let hay: Vec<char> = content.text().chars().collect();
    let mut consumed: Vec<(usize, usize)> = Vec::new();
    let mut located = Vec::new();
    let mut unmatched = Vec::new();

    for extraction in extractions(response) {
        let needle: Vec<char> = extraction.chars().collect();
        let free = |start: usize| {
            let end = start + needle.len();
            consumed.iter().all(|&(s, e)| end <= s || start >= e)
        };
        let exact = occurrences(&hay, &needle, false);
        let folded = if exact.is_empty() { occurrences(&hay, &needle, true) } else { Vec::new() };
        let (candidates, case_insensitive) = if exact.is_empty() { (folded, true) } else { (exact, false) };
        let Some(&start) = candidates.iter().find(|&&s| free(s)).or_else(|| candidates.first()) else {
            unmatched.push(extraction);
            continue;
        };
        let end = start + needle.len();
        let span = char_span_to_token_span(content, start, end)
            .ok()
            .flatten()
            .expect("trimmed non-empty extraction covers a token");
        consumed.push((start, end));
        located.push(Located {
            extraction,
            char_start: start,
            char_end: end,
            span,
            case_insensitive,
            ambiguous: candidates.len() > 1,
        });
    }

    let singles: Vec<SpanSet> = located.iter().map(|l| SpanSet::from_spans([l.span]).expect("single span")).collect();
    Alignment { spans: merge_union(&singles), located, unmatched }
}
