mod common;

use proptest::prelude::*;
use splate_core::head::{splade_pool, topk_prune};
use splate_core::numerics::Vector;

#[test]
fn fresh_heads_reproduce_tied_logits_bitwise() {
    assert_eq!(common::identity_init_violations(200, 8), 0);
}

#[test]
fn pooling_invariants_hold_on_random_records() {
    let v = common::pooling_invariants(200, 9);
    assert_eq!(v.total(), 0, "{v:?}");
}

proptest! {
    #[test]
    fn topk_keeps_the_heaviest_and_breaks_ties_by_id(
        weights in prop::collection::vec(prop_oneof![Just(0.0), Just(-1.0), Just(0.5), 0.0f64..3.0], 1..60),
        k in 0usize..70,
    ) {
        let s = topk_prune(&weights, k);
        let positive = weights.iter().filter(|&&w| w > 0.0).count();
        prop_assert_eq!(s.len(), k.min(positive));
        let kept: Vec<u32> = s.terms().collect();
        for (t, &w) in weights.iter().enumerate() {
            if w <= 0.0 || kept.contains(&(t as u32)) {
                continue;
            }
            // a dropped positive term never beats a kept one
            for &(kt, kw) in s.entries() {
                prop_assert!(w < kw || (w == kw && kt < t as u32));
            }
        }
    }

    #[test]
    fn pooling_is_an_elementwise_max(
        rows in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 6), 1..8),
    ) {
        let logits: Vec<Vector> = rows.iter().map(|r| Vector::new(r.clone()).unwrap()).collect();
        let pooled = splade_pool(&logits).unwrap();
        for j in 0..6 {
            let m = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(pooled.as_slice()[j], m.max(0.0).ln_1p());
        }
    }
}
