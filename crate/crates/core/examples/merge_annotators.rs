//! Combine several annotators' spans into one gold set.
//!
//! Overlapping spans merge into their covering span; spans that only touch
//! stay apart.

use targetspan::span::{merge_union, tokenize, Span, SpanSet};

fn main() -> targetspan::error::Result<()> {
    let content = tokenize("those conservatory graduates think the whole stage belongs to them");
    let n = content.len();
    let a1 = SpanSet::validate(n, [Span::new(1, 3)])?;
    let a2 = SpanSet::validate(n, [Span::new(2, 3), Span::new(9, 10)])?;
    let a3 = SpanSet::validate(n, [Span::new(0, 2), Span::new(3, 4)])?;

    let gold = merge_union([&a1, &a2, &a3]);
    for span in gold.iter() {
        let words: Vec<&str> = content.tokens()[span.tokens()].iter().map(|t| t.surface.as_str()).collect();
        println!("{span} {}", words.join(" "));
    }
    Ok(())
}
