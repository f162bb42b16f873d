//! Classify failed predictions by boundary errors and span-count mismatch.

use targetspan::analysis::{boundary_errors, error_report, Prediction};
use targetspan::span::{Span, SpanSet};

fn set(raw: &[(usize, usize)]) -> SpanSet {
    SpanSet::from_spans(raw.iter().map(|&(s, e)| Span::new(s, e))).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = [
        (set(&[(1, 2)]), set(&[(1, 3)])),
        (set(&[(0, 1), (4, 5)]), set(&[(4, 5)])),
        (set(&[]), set(&[(2, 3)])),
        (set(&[(0, 2)]), set(&[(0, 2)])),
    ];
    for (pred, gold) in &rows {
        for (p, g) in boundary_errors(pred, gold) {
            println!("boundary: predicted {p} vs gold {g}");
        }
    }
    let mut report = error_report(rows.iter().map(|(pred, gold)| Prediction { pred, gold, n_tokens: 6 }))?;
    report.notes = "sample 3 misses an implicit reference".into();
    print!("\n{report}\n");
    report.write_tsv(std::io::stdout().lock())?;
    Ok(())
}
