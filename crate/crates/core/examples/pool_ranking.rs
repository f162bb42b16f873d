//! Rank (system, prompt) candidates against pooled gold and pick the best.

use targetspan::metrics::MatchMode;
use targetspan::pooling::{rank_pool, select_best, CandidateId, CandidatePool, SampleSpans};
use targetspan::span::{Span, SpanSet};

fn spans(raw: &[(usize, usize)]) -> SpanSet {
    SpanSet::from_spans(raw.iter().map(|&(s, e)| Span::new(s, e))).unwrap()
}

fn samples(a: &[(usize, usize)], b: &[(usize, usize)]) -> SampleSpans {
    [("a".to_string(), spans(a)), ("b".to_string(), spans(b))].into()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut pool = CandidatePool::new(samples(&[(0, 2)], &[(4, 5)]));
    pool.insert(CandidateId::new("big-model", "prompt1"), samples(&[(0, 2)], &[(4, 5), (5, 6)]))?;
    pool.insert(CandidateId::new("big-model", "prompt2"), samples(&[(0, 1)], &[(4, 5)]))?;
    pool.insert(CandidateId::new("small-model", "prompt1"), samples(&[], &[(3, 6)]))?;

    let ranked = rank_pool(&pool, MatchMode::Strict)?;
    ranked.write_tsv(std::io::stdout().lock())?;
    println!("best: {}", select_best(&ranked)?.label());
    Ok(())
}
