//! Pairwise agreement between annotators, by token overlap (DSC) and by
//! longest common subsequence of highlighted words.

use std::collections::BTreeMap;

use targetspan::agreement::{pairwise_agreement, Annotations};
use targetspan::span::{tokenize, Span, SpanSet};

fn main() -> targetspan::error::Result<()> {
    let texts = [
        ("s1", "those piano brains never stop whining about songwriters"),
        ("s2", "the horrible purple person left early"),
    ];
    let contents: BTreeMap<String, _> = texts.iter().map(|(id, t)| (id.to_string(), tokenize(t))).collect();

    let spans = |id: &str, raw: &[(usize, usize)]| -> targetspan::error::Result<(String, SpanSet)> {
        let set = SpanSet::validate(contents[id].len(), raw.iter().map(|&(s, e)| Span::new(s, e)))?;
        Ok((id.to_string(), set))
    };
    let mut annotations = Annotations::new();
    annotations.insert("ann1".into(), [spans("s1", &[(1, 3), (7, 8)])?, spans("s2", &[(1, 4)])?].into());
    annotations.insert("ann2".into(), [spans("s1", &[(1, 3)])?, spans("s2", &[(2, 4)])?].into());
    annotations.insert("ann3".into(), [spans("s1", &[(7, 8)])?, spans("s2", &[])?].into());

    for r in pairwise_agreement(&annotations, &contents)? {
        println!("{} vs {}: dsc {:.3} lcs {:.3}", r.pair.0, r.pair.1, r.dsc, r.lcs);
    }
    Ok(())
}
