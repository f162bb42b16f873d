//! Load JSONL records, print corpus statistics and a seeded 8/1/1 split.
//!
//! ```text
//! cargo run --example corpus_stats_split -- tests/fixtures/gold.jsonl
//! ```

use std::io::Cursor;
use std::path::Path;

use targetspan::corpus::{read_jsonl, split, stats, AltAveraging, SplitRatios};

const INLINE: &str = r#"{"id":"a","text":"the horrible purple person left","spans":[[4,26]]}
{"id":"b","text":"piano brains and songwriters again","spans":[[0,12],[17,28]]}
{"id":"c","text":"nothing to see","spans":[]}
"#;

fn main() -> targetspan::error::Result<()> {
    let samples = match std::env::args().nth(1) {
        Some(path) => targetspan::corpus::load_annotated(path)?,
        None => read_jsonl(Cursor::new(INLINE), Path::new("<inline>"))?,
    };

    let s = stats(samples.iter().map(|s| &s.spans), AltAveraging::Pooled)?;
    println!("{} samples, {} spans", s.n_samples, s.n_spans);
    println!("targets per content: {}", s.tpc_display());
    println!("target length:       {}", s.alt_display());

    let ids: Vec<&str> = samples.iter().map(|s| s.id.as_str()).collect();
    let folds = split(ids, SplitRatios::EIGHT_ONE_ONE, 13);
    println!("train {:?}\ndev   {:?}\ntest  {:?}", folds.train, folds.dev, folds.test);
    for w in &folds.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
