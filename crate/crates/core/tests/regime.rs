mod common;

use common::tree_leaf;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relsec::regime::{
    best_case_rate, case_rate, check_equivocation_bound, eve_rate, interior_point, DEFAULT_TOL,
};
use relsec::{classify, evaluate_rate_point, oracle_max_rate, InfoQuantities, Leaf, OracleConfig};

fn record(seed: u64) -> InfoQuantities {
    InfoQuantities::sample_consistent(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Adds `d` bits to everything Eve learns about the message.
fn louder_eve(q: &InfoQuantities, d: f64) -> InfoQuantities {
    InfoQuantities { i_x1_z: q.i_x1_z + d, i_x1_z_x2: q.i_x1_z_x2 + d, i_x1x2_z: q.i_x1x2_z + d, ..*q }
}

fn scaled(q: &InfoQuantities, s: f64) -> InfoQuantities {
    let v: Vec<f64> = q.fields().iter().map(|(_, x)| x * s).collect();
    InfoQuantities {
        i_x2_y3: v[0],
        i_x2_z: v[1],
        i_x2_z_x1: v[2],
        i_yhat_y3_x2: v[3],
        wz_bob: v[4],
        wz_eve: v[5],
        i_x1_yhat_y3_x2: v[6],
        i_x1_y3_x2: v[7],
        i_x1_z: v[8],
        i_x1_z_x2: v[9],
        i_x1x2_z: v[10],
    }
}

#[test]
fn worked_example_by_hand() {
    let q = InfoQuantities {
        i_x2_y3: 0.5,
        i_x2_z: 0.3,
        i_x2_z_x1: 0.4,
        i_yhat_y3_x2: 0.4,
        wz_bob: 0.6,
        wz_eve: 0.5,
        i_x1_yhat_y3_x2: 0.8,
        i_x1_y3_x2: 0.5,
        i_x1_z: 0.2,
        i_x1_z_x2: 0.3,
        i_x1x2_z: 0.6,
    };
    assert_eq!(tree_leaf(&q).0, Leaf::C1aI);
    let c = case_rate(&q, Leaf::C1aI, DEFAULT_TOL).unwrap();
    // Bob gets I(X1; Y2hat, Y3 | X2) = 0.8 and Eve I(X1; Z) = 0.2.
    assert!((c.r1 - 0.6).abs() < 1e-12);
    assert_eq!((c.r2, c.r_hat), (0.5, 0.9));
}

#[test]
fn degenerate_record_ties_everywhere() {
    let q = InfoQuantities::degenerate_relay(0.7, 0.2);
    let cases = classify(&q, DEFAULT_TOL).unwrap();
    assert!(cases.len() > 1);
    assert!(cases.iter().all(|c| c.tie));
}

#[test]
fn inconsistent_record_is_refused() {
    let mut q = record(1);
    q.i_x1x2_z += 0.1;
    assert!(classify(&q, DEFAULT_TOL).is_err());
    assert!(oracle_max_rate(&q, &OracleConfig::default()).is_err());
}

#[test]
fn every_leaf_is_reachable() {
    let mut seen = std::collections::HashSet::new();
    for seed in 0..2000 {
        seen.insert(tree_leaf(&record(seed)).0);
    }
    assert_eq!(seen.len(), Leaf::ALL.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn clear_records_land_in_exactly_their_leaf(seed in any::<u64>()) {
        let q = record(seed);
        let (leaf, gap) = tree_leaf(&q);
        prop_assume!(gap > 1e-6);
        let cases = classify(&q, DEFAULT_TOL).unwrap();
        prop_assert_eq!(cases.len(), 1);
        prop_assert_eq!(cases[0].leaf, leaf);
        prop_assert!(!cases[0].tie);
    }

    #[test]
    fn closed_forms_randomize_enough(seed in any::<u64>()) {
        let q = record(seed);
        for case in classify(&q, DEFAULT_TOL).unwrap() {
            prop_assert!(check_equivocation_bound(&case_rate(&q, case.leaf, DEFAULT_TOL).unwrap()).is_ok());
        }
    }

    #[test]
    fn some_leaf_always_applies(seed in any::<u64>()) {
        prop_assert!(!classify(&record(seed), DEFAULT_TOL).unwrap().is_empty());
    }

    #[test]
    fn louder_eve_never_helps(seed in any::<u64>(), d in 0.0..0.5f64, r2 in 0.0..4.0f64, extra in 0.0..4.0f64) {
        let q = record(seed);
        let worse = louder_eve(&q, d);
        let before = evaluate_rate_point(&q, r2, r2 + extra, DEFAULT_TOL).r1;
        let after = evaluate_rate_point(&worse, r2, r2 + extra, DEFAULT_TOL).r1;
        prop_assert!(after <= before + 1e-12);
        let (_, b0) = best_case_rate(&q, DEFAULT_TOL).unwrap();
        let (_, b1) = best_case_rate(&worse, DEFAULT_TOL).unwrap();
        prop_assert!(b1.r1 <= b0.r1 + 1e-12);
    }

    #[test]
    fn rates_scale_with_the_record(seed in any::<u64>(), s in 0.25..4.0f64) {
        let q = record(seed);
        let (leaf, gap) = tree_leaf(&q);
        prop_assume!(gap > 1e-6);
        let base = case_rate(&q, leaf, DEFAULT_TOL).unwrap();
        let big = case_rate(&scaled(&q, s), leaf, DEFAULT_TOL).unwrap();
        prop_assert!((big.r1 - s * base.r1).abs() < 1e-9);
        prop_assert!((big.r2 - s * base.r2).abs() < 1e-9);
    }

    #[test]
    fn eve_rate_shrinks_as_relay_rate_grows(seed in any::<u64>(), lo in 0.0..3.0f64, step in 0.0..1.0f64) {
        let q = record(seed);
        let (_, a) = eve_rate(&q, lo, 0.0);
        let (_, b) = eve_rate(&q, lo + step, 0.0);
        prop_assert!(b <= a + 1e-12);
        prop_assert!(b >= q.i_x1_z - 1e-12 && a <= q.i_x1_z_x2 + 1e-12);
    }

    #[test]
    fn interior_points_approach_the_limit_linearly(seed in any::<u64>()) {
        let q = record(seed);
        let (leaf, gap) = tree_leaf(&q);
        prop_assume!(gap > 1e-3 && q.i_x2_y3 > 1e-3 && leaf != Leaf::C1bI);
        let limit = case_rate(&q, leaf, DEFAULT_TOL).unwrap().r1;
        for delta in [1e-4, 1e-5, 1e-6] {
            let (r2, r_hat) = interior_point(&q, leaf, delta);
            let p = evaluate_rate_point(&q, r2, r_hat, DEFAULT_TOL);
            prop_assert!(p.secrecy_valid);
            prop_assert!((p.r1 - limit).abs() <= 4.0 * delta + 1e-12, "{leaf}: {} vs {limit} at {delta}", p.r1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_forms_never_beat_the_oracle(seed in any::<u64>()) {
        let q = record(seed);
        let best = oracle_max_rate(&q, &OracleConfig::new(0.02)).unwrap();
        for case in classify(&q, DEFAULT_TOL).unwrap() {
            let c = case_rate(&q, case.leaf, DEFAULT_TOL).unwrap();
            prop_assert!(c.r1 <= best.r1 + 0.02 + 1e-9, "{}: {} > {}", case.leaf, c.r1, best.r1);
        }
    }
}
