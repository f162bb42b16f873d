//! Spans to BIO tags and back, orphan-I repair, and tag-level scores.

use targetspan::bio::{decode_bio, encode_bio, tag_metrics, write_conll, ConllSample, Tag, TagSequence};
use targetspan::span::{tokenize, Span, SpanSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let content = tokenize("conservatory graduates think they own the stage");
    let gold = SpanSet::validate(content.len(), [Span::new(0, 2), Span::new(3, 4)])?;
    let tags = encode_bio(content.len(), &gold)?;
    assert_eq!(decode_bio(&tags).spans, gold);

    let sample = ConllSample {
        meta: vec![("id".into(), "s3".into())],
        tokens: content.surfaces().map(str::to_string).collect(),
        tags: tags.clone(),
    };
    write_conll(std::io::stdout().lock(), &[sample])?;

    // an I with nothing to continue is read as B
    let model_output = TagSequence(vec![Tag::I, Tag::I, Tag::O, Tag::B, Tag::O, Tag::O, Tag::O]);
    let decoded = decode_bio(&model_output);
    println!("\ndecoded {:?}, repaired positions {:?}", decoded.spans.spans(), decoded.repairs);

    let m = tag_metrics(&model_output, &tags)?;
    println!("f1 {:.3} precision {:.3} recall {:.3} accuracy {:.3}", m.f1, m.precision, m.recall, m.accuracy);
    Ok(())
}
