//! Randomized invariants complementing the example-based unit tests.

use std::collections::BTreeMap;

use proptest::prelude::*;

use lawrank::chunking::{chunk_article, ChunkConfig};
use lawrank::ensemble::minmax_normalize;
use lawrank::lexical::{tfidf_cosine, InvertedIndex};
use lawrank::metrics::f2_score;

fn tokens(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i}")).collect()
}

proptest! {
    #[test]
    fn chunks_cover_every_token(
        len in 1usize..600,
        window in 1usize..200,
        stride_frac in 1usize..200,
    ) {
        let stride = stride_frac.min(window);
        let cfg = ChunkConfig::new(window, stride).unwrap();
        let toks = tokens(len);
        let chunks = chunk_article("a", &toks, &cfg).unwrap();
        let mut covered = vec![false; len];
        for c in &chunks {
            prop_assert!(c.tokens.len() <= window);
            for i in c.start..c.start + c.tokens.len() {
                covered[i] = true;
            }
        }
        prop_assert!(covered.iter().all(|&v| v));
        // Starts strictly increase, so no duplicate chunks.
        for pair in chunks.windows(2) {
            prop_assert!(pair[0].start < pair[1].start);
        }
    }

    #[test]
    fn tfidf_cosine_symmetric_and_bounded(
        a in proptest::collection::vec(0usize..12, 0..20),
        b in proptest::collection::vec(0usize..12, 0..20),
    ) {
        let vocab: Vec<String> = (0..12).map(|i| format!("v{i}")).collect();
        let a: Vec<String> = a.iter().map(|&i| vocab[i].clone()).collect();
        let b: Vec<String> = b.iter().map(|&i| vocab[i].clone()).collect();
        let stats = InvertedIndex::build([
            ("u1".to_string(), a.clone()),
            ("u2".to_string(), b.clone()),
            ("u3".to_string(), vocab.clone()),
        ]).unwrap();
        let ab: f64 = tfidf_cosine(&a, &b, &stats);
        let ba: f64 = tfidf_cosine(&b, &a, &stats);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            let aa: f64 = tfidf_cosine(&a, &a, &stats);
            prop_assert!((aa - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn minmax_outputs_unit_interval(
        values in proptest::collection::vec(-1e6f64..1e6, 1..30),
    ) {
        let scores: BTreeMap<String, f64> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (format!("k{i}"), v))
            .collect();
        let normalized = minmax_normalize(&scores);
        prop_assert_eq!(normalized.len(), scores.len());
        for v in normalized.values() {
            prop_assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn f2_bounded_between_inputs(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let f2 = f2_score(p, r);
        prop_assert!((0.0..=1.0).contains(&f2));
        if p > 0.0 && r > 0.0 {
            // Any F-beta mean lies between its two inputs.
            prop_assert!(f2 >= p.min(r) - 1e-12);
            prop_assert!(f2 <= p.max(r) + 1e-12);
            // Recall weighting: F2 sits on recall's side of F1.
            let f1 = 2.0 * p * r / (p + r);
            if r >= p {
                prop_assert!(f2 + 1e-12 >= f1);
            } else {
                prop_assert!(f2 <= f1 + 1e-12);
            }
        }
    }
}
