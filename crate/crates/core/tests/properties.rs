mod common;

use std::collections::BTreeSet;

use common::set;
use proptest::prelude::*;
use targetspan::agreement::{dsc, lcs_agreement};
use targetspan::analysis::{boundary_errors, error_report, Prediction};
use targetspan::bio::{decode_bio, encode_bio, Tag, TagSequence};
use targetspan::corpus::{split, stats, AltAveraging, SplitRatios};
use targetspan::metrics::{f1_m, MatchMode};
use targetspan::pooling::{rank_pool, CandidateId, CandidatePool, SampleSpans};
use targetspan::span::{char_span_to_token_span, merge_union, tokenize, Span, SpanSet};

/// Disjoint spans over `n` tokens, built from a random boolean mask and cut points.
fn span_set(n: usize) -> impl Strategy<Value = SpanSet> {
    (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)).prop_map(move |(on, cut)| {
        let mut spans = Vec::new();
        let mut open: Option<usize> = None;
        for i in 0..n {
            match (open, on[i]) {
                (None, true) => open = Some(i),
                (Some(s), true) if cut[i] => {
                    spans.push((s, i));
                    open = Some(i);
                }
                (Some(s), false) => {
                    spans.push((s, i));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            spans.push((s, n));
        }
        set(&spans)
    })
}

fn sized_sets(k: usize) -> impl Strategy<Value = (usize, Vec<SpanSet>)> {
    (1usize..16).prop_flat_map(move |n| (Just(n), prop::collection::vec(span_set(n), k)))
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(("[a-zA-Zé'.]{1,6}", prop::sample::select(vec![" ", "  ", "\t", "\n"])), 1..12)
        .prop_map(|parts| parts.into_iter().map(|(w, g)| format!("{w}{g}")).collect())
}

proptest! {
    #[test]
    fn tokens_reconstruct_the_text(text in text()) {
        let c = tokenize(&text);
        let joined: String = c.surfaces().collect::<Vec<_>>().join(" ");
        let squeezed = text.split_whitespace().collect::<Vec<_>>().join(" ");
        prop_assert_eq!(joined, squeezed);
        for (i, t) in c.tokens().iter().enumerate() {
            prop_assert_eq!(c.slice_chars(t.char_start, t.char_end), t.surface.as_str());
            let span = char_span_to_token_span(&c, t.char_start, t.char_end).unwrap();
            prop_assert_eq!(span, Some(Span::new(i, i + 1)));
        }
    }

    #[test]
    fn merge_union_is_order_free_and_idempotent((_, sets) in sized_sets(3)) {
        let m = merge_union(&sets);
        prop_assert_eq!(&merge_union([&sets[2], &sets[0], &sets[1]]), &m);
        prop_assert_eq!(&merge_union([&m, &m]), &m);
        let union: BTreeSet<usize> = sets.iter().flat_map(|s| s.token_indices().collect::<Vec<_>>()).collect();
        prop_assert_eq!(m.token_indices().collect::<BTreeSet<_>>(), union);
        for w in m.spans().windows(2) {
            prop_assert!(w[0].end() <= w[1].start());
        }
    }

    #[test]
    fn f1_m_swaps_recall_and_precision((_, sets) in sized_sets(2)) {
        for mode in [MatchMode::Strict, MatchMode::Coverage] {
            let ab = f1_m(&sets[0], &sets[1], mode);
            let ba = f1_m(&sets[1], &sets[0], mode);
            prop_assert_eq!(ab.rec_m, ba.prec_m);
            prop_assert_eq!(ab.prec_m, ba.rec_m);
            prop_assert!((ab.f1_m - ba.f1_m).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab.f1_m));
        }
    }

    #[test]
    fn coverage_never_scores_below_strict((_, sets) in sized_sets(2)) {
        let s = f1_m(&sets[0], &sets[1], MatchMode::Strict);
        let c = f1_m(&sets[0], &sets[1], MatchMode::Coverage);
        prop_assert!(c.rec_m >= s.rec_m && c.prec_m >= s.prec_m);
    }

    #[test]
    fn removing_a_zero_precision_output((_, sets) in sized_sets(2)) {
        let (gold, output) = (&sets[0], &sets[1]);
        let before = f1_m(gold, output, MatchMode::Strict);
        for (i, &span) in output.spans().iter().enumerate() {
            if before.per_output[i].1 == 0.0 {
                let kept = SpanSet::from_spans(output.iter().copied().filter(|&s| s != span)).unwrap();
                let after = f1_m(gold, &kept, MatchMode::Strict);
                prop_assert!(after.prec_m >= before.prec_m);
                prop_assert!(after.rec_m <= before.rec_m + 1e-15);
            }
        }
    }

    #[test]
    fn agreement_is_symmetric((n, sets) in sized_sets(2)) {
        let words: Vec<String> = (0..n).map(|i| format!("w{}", i % 3)).collect();
        let c = tokenize(&words.join(" "));
        prop_assert_eq!(dsc(&sets[0], &sets[1]), dsc(&sets[1], &sets[0]));
        prop_assert_eq!(lcs_agreement(&sets[0], &sets[1], &c), lcs_agreement(&sets[1], &sets[0], &c));
        prop_assert!((0.0..=1.0).contains(&dsc(&sets[0], &sets[1])));
    }

    #[test]
    fn bio_round_trip((n, sets) in sized_sets(1)) {
        let tags = encode_bio(n, &sets[0]).unwrap();
        prop_assert_eq!(tags.len(), n);
        let d = decode_bio(&tags);
        prop_assert_eq!(&d.spans, &sets[0]);
        prop_assert!(d.repairs.is_empty());
    }

    #[test]
    fn decode_is_total(tags in prop::collection::vec(prop::sample::select(vec![Tag::B, Tag::I, Tag::O]), 0..20)) {
        let d = decode_bio(&TagSequence(tags.clone()));
        // re-encoding a decoded sequence gives a valid one that decodes to the same spans
        let again = decode_bio(&encode_bio(tags.len(), &d.spans).unwrap());
        prop_assert_eq!(again.spans, d.spans);
        prop_assert!(again.repairs.is_empty());
    }

    #[test]
    fn boundary_pairs_are_symmetric((_, sets) in sized_sets(2)) {
        let ab = boundary_errors(&sets[0], &sets[1]);
        let mut ba: Vec<(Span, Span)> = boundary_errors(&sets[1], &sets[0]).into_iter().map(|(p, g)| (g, p)).collect();
        ba.sort();
        let mut ab_sorted = ab.clone();
        ab_sorted.sort();
        prop_assert_eq!(ab_sorted, ba);
    }

    #[test]
    fn reports_ignore_sample_order((n, sets) in sized_sets(6), seed in any::<u64>()) {
        let pairs: Vec<(&SpanSet, &SpanSet)> = sets.chunks(2).map(|c| (&c[0], &c[1])).collect();
        let mut shuffled = pairs.clone();
        shuffled.rotate_left((seed % 3) as usize);
        let report = |p: &[(&SpanSet, &SpanSet)]| {
            error_report(p.iter().map(|&(pred, gold)| Prediction { pred, gold, n_tokens: n })).unwrap()
        };
        let (a, b) = (report(&pairs), report(&shuffled));
        prop_assert_eq!(a.n_failed, b.n_failed);
        prop_assert!((a.boundary_rate - b.boundary_rate).abs() < 1e-15);
        let total = if a.n_failed > 0 { 1.0 } else { 0.0 };
        prop_assert!((a.count_over + a.count_under + a.count_equal - total).abs() < 1e-12);

        let mut rev = sets.clone();
        rev.reverse();
        let (s1, s2) = (stats(&sets, AltAveraging::Pooled).unwrap(), stats(&rev, AltAveraging::Pooled).unwrap());
        prop_assert!((s1.tpc_mean - s2.tpc_mean).abs() < 1e-12 && (s1.alt_std - s2.alt_std).abs() < 1e-12);
    }

    #[test]
    fn ranking_ignores_candidate_order((_, sets) in sized_sets(8), rot in 0usize..4) {
        let gold: SampleSpans = [("a".to_string(), sets[0].clone()), ("b".to_string(), sets[1].clone())].into();
        let ids: Vec<CandidateId> = (0..3).map(|i| CandidateId::new(format!("m{}", i % 2), format!("p{i}"))).collect();
        let build = |order: &[usize]| {
            let mut pool = CandidatePool::new(gold.clone());
            for &i in order {
                let outputs: SampleSpans =
                    [("a".to_string(), sets[2 + 2 * i].clone()), ("b".to_string(), sets[3 + 2 * i].clone())].into();
                pool.insert(ids[i].clone(), outputs).unwrap();
            }
            rank_pool(&pool, MatchMode::Strict).unwrap()
        };
        let mut order = vec![0, 1, 2];
        order.rotate_left(rot % 3);
        let (a, b) = (build(&[0, 1, 2]), build(&order));
        prop_assert_eq!(&a, &b);
        for w in a.entries().windows(2) {
            prop_assert!(w[0].f1_m > w[1].f1_m || (w[0].f1_m == w[1].f1_m && w[0].id < w[1].id));
        }
    }

    #[test]
    fn split_is_a_seeded_partition(n in 0usize..60, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        let a = split(items.clone(), SplitRatios::EIGHT_ONE_ONE, seed);
        prop_assert_eq!(&a, &split(items.clone(), SplitRatios::EIGHT_ONE_ONE, seed));
        let mut all: Vec<usize> = a.train.iter().chain(&a.dev).chain(&a.test).copied().collect();
        all.sort();
        prop_assert_eq!(all, items);
        prop_assert_eq!([a.train.len(), a.dev.len(), a.test.len()], SplitRatios::EIGHT_ONE_ONE.sizes(n));
    }
}
