mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use splate_core::head::SparseVector;
use splate_core::index::{Algorithm, BuildOptions, InvertedIndex};

#[test]
fn pruned_algorithms_match_the_oracle() {
    let report = common::pruning_safety(70, 3);
    assert!(report.cases >= 200);
    assert!(report.mismatches.is_empty(), "{:#?}", report.mismatches);
}

#[test]
fn pruning_skips_postings_on_a_skewed_corpus() {
    for (algo, e) in common::pruning_effectiveness(3000, 20) {
        assert!(e.skipped > 0, "{algo}: nothing skipped");
        assert!(
            e.fraction_scored() < 0.8,
            "{algo}: scored {:.3}",
            e.fraction_scored()
        );
    }
}

fn sparse() -> impl Strategy<Value = SparseVector> {
    prop::collection::btree_map(0u32..40, 1u8..=8, 0..12).prop_map(|m| {
        SparseVector::from_pairs(m.into_iter().map(|(t, w)| (t, f64::from(w) / 8.0))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_algorithm_agrees_with_the_oracle(
        docs in prop::collection::vec(sparse(), 1..60),
        query in sparse(),
        k in 1usize..20,
        block in 1usize..9,
    ) {
        let mut docs: BTreeMap<u64, SparseVector> = docs.into_iter().enumerate().map(|(i, d)| (i as u64 * 3, d)).collect();
        docs.insert(1_000, SparseVector::from_pairs([(0, 1.0)]).unwrap());
        let index = InvertedIndex::build(&docs, 40, BuildOptions { quantization_bits: 8, block_length: block }).unwrap();
        let expected: Vec<u64> = common::oracle_topk(&docs, &query, 8, k).into_iter().map(|e| e.0).collect();
        for algo in [Algorithm::Exhaustive, Algorithm::BlockMaxWand, Algorithm::MaxScore] {
            let got: Vec<u64> = index.retrieve(&query, k, algo).0.ids().collect();
            prop_assert_eq!(&got, &expected, "{}", algo);
        }
    }

    #[test]
    fn decoded_weights_are_within_one_step(docs in prop::collection::vec(sparse(), 1..30)) {
        let docs: BTreeMap<u64, SparseVector> = docs.into_iter().enumerate().map(|(i, d)| (i as u64, d)).collect();
        prop_assume!(docs.values().any(|d| !d.is_empty()));
        let index = InvertedIndex::build(&docs, 40, BuildOptions::default()).unwrap();
        let step = index.meta().global_scale;
        for (ord, d) in docs.values().enumerate() {
            let decoded = index.decoded_document(ord as u32);
            prop_assert_eq!(decoded.len(), d.len());
            for ((t, w), &(t0, w0)) in decoded.into_iter().zip(d.entries()) {
                prop_assert_eq!(t, t0);
                prop_assert!(w >= w0 - 1e-12 && w - w0 <= step + 1e-12);
            }
        }
    }
}
