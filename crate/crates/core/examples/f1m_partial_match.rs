//! Partial-match scoring of predicted spans against gold spans.
//!
//! ```text
//! cargo run --example f1m_partial_match
//! ```

use targetspan::metrics::{avg_f1_m, f1_m, MatchMode};
use targetspan::span::{char_span_to_token_span, tokenize, SpanSet};

fn main() -> targetspan::error::Result<()> {
    let content = tokenize("the horrible purple person left early");

    // character offsets snap to whole tokens
    let gold_span = char_span_to_token_span(&content, 4, 26)?.expect("covers tokens");
    let output_span = char_span_to_token_span(&content, 13, 26)?.expect("covers tokens");
    let gold = SpanSet::validate(content.len(), [gold_span])?;
    let output = SpanSet::validate(content.len(), [output_span])?;
    println!("gold {gold_span}, output {output_span}");

    for mode in [MatchMode::Strict, MatchMode::Coverage] {
        let r = f1_m(&gold, &output, mode);
        println!("{mode}: rec {:.3} prec {:.3} f1 {:.3}", r.rec_m, r.prec_m, r.f1_m);
    }

    // a straddling output earns nothing in either direction
    let straddle = SpanSet::validate(content.len(), [char_span_to_token_span(&content, 13, 31)?.unwrap()])?;
    println!("straddling f1: {:.3}", f1_m(&gold, &straddle, MatchMode::Strict).f1_m);

    let corpus = [(&gold, &output), (&gold, &gold), (&gold, &straddle)];
    let avg = avg_f1_m(corpus, MatchMode::Strict)?;
    println!("macro over {} samples: f1 {:.3}", avg.n_samples, avg.f1_m);
    Ok(())
}
