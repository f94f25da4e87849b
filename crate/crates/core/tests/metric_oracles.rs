//! Metric checks against independent oracles: exhaustive matching for the
//! F-measure, mir_eval golden files for continuity, scipy for Spearman.

mod common;

use beatdiag::diagnostics::spearman;
use beatdiag::metrics::{continuity, evaluate, f_measure, EvalConfig};
use beatdiag::BeatSequence;
use common::oracles::{clustered, continuity_cases, oracle_f, FIXTURES};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

#[test]
fn f_measure_equals_optimal_matching() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf00d);
    let cfg = EvalConfig::default();
    for case in 0..1000 {
        let ne = rng.gen_range(0..=12);
        let nr = rng.gen_range(0..=12);
        let est = clustered(&mut rng, ne);
        let reference = clustered(&mut rng, nr);
        let got = f_measure(&BeatSequence::new(est.clone()), &BeatSequence::new(reference.clone()), &cfg);
        let want = oracle_f(&est, &reference, cfg.f_window);
        assert!((got - want).abs() <= 1e-9, "case {case}: {got} vs {want}\nest {est:?}\nref {reference:?}");
    }
}

#[test]
fn continuity_matches_golden_files() {
    let cases = continuity_cases();
    assert_eq!(cases.len(), 50);
    let cfg = EvalConfig::default();
    for (i, c) in cases.iter().enumerate() {
        let est = BeatSequence::new(c.estimate.clone());
        let reference = BeatSequence::new(c.reference.clone());
        let got = continuity(&est, &reference, &cfg).unwrap();
        for (name, g, w) in [
            ("cmlc", got.cmlc, c.cmlc),
            ("cmlt", got.cmlt, c.cmlt),
            ("amlc", got.amlc, c.amlc),
            ("amlt", got.amlt, c.amlt),
        ] {
            assert!((g - w).abs() <= 1e-9, "case {i} ({}): {name} {g} vs {w}", c.kind);
        }
        let f = f_measure(&est, &reference, &cfg);
        assert!((f - c.f_measure).abs() <= 1e-9, "case {i} ({}): F {f} vs {}", c.kind, c.f_measure);
    }
}

#[derive(Deserialize)]
struct SpearmanCase {
    x: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
    p_value: f64,
}

#[test]
fn spearman_matches_golden_files() {
    let text = std::fs::read_to_string(format!("{FIXTURES}/spearman.json")).unwrap();
    let cases: Vec<SpearmanCase> = serde_json::from_str(&text).unwrap();
    for (i, c) in cases.iter().enumerate() {
        let got = spearman(&c.x, &c.y).unwrap();
        assert!((got.rho - c.rho).abs() <= 1e-9, "case {i}: rho {} vs {}", got.rho, c.rho);
        assert!(
            (got.p_value - c.p_value).abs() <= 1e-9 + 1e-6 * c.p_value,
            "case {i}: p {} vs {}",
            got.p_value,
            c.p_value
        );
    }
}

fn beats(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..30.0, 0..max_len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

/// Near-periodic sequences so continuity is non-trivial.
fn periodic() -> impl Strategy<Value = Vec<f64>> {
    (0.3f64..1.5, 0.0f64..1.0, 2usize..40, prop::collection::vec(-0.05f64..0.05, 40)).prop_map(
        |(period, start, n, jitter)| (0..n).map(|i| start + period * i as f64 + jitter[i] * period).collect(),
    )
}

proptest! {
    #[test]
    fn ordering_invariants(reference in periodic(), est in prop_oneof![periodic(), beats(40)]) {
        let r = evaluate(&BeatSequence::from_unsorted(est), &BeatSequence::from_unsorted(reference), &EvalConfig::default()).unwrap();
        prop_assert!(r.cmlc <= r.cmlt && r.cmlt <= r.amlt, "{r:?}");
        prop_assert!(r.cmlc <= r.amlc && r.amlc <= r.amlt, "{r:?}");
        for v in [r.f_measure, r.cmlc, r.cmlt, r.amlc, r.amlt] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn shift_invariance(reference in periodic(), est in periodic(), shift in 0.0f64..100.0) {
        let cfg = EvalConfig::default();
        let est = BeatSequence::from_unsorted(est);
        let reference = BeatSequence::from_unsorted(reference);
        let a = evaluate(&est, &reference, &cfg).unwrap();
        let b = evaluate(&est.shifted(shift), &reference.shifted(shift), &cfg).unwrap();
        for (x, y) in [(a.f_measure, b.f_measure), (a.cmlc, b.cmlc), (a.cmlt, b.cmlt), (a.amlc, b.amlc), (a.amlt, b.amlt)] {
            prop_assert!((x - y).abs() <= 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn perfect_copy_scores_one(reference in periodic()) {
        let r = BeatSequence::from_unsorted(reference);
        let e = evaluate(&r, &r, &EvalConfig::default()).unwrap();
        prop_assert_eq!((e.f_measure, e.cmlc, e.cmlt, e.amlc, e.amlt), (1.0, 1.0, 1.0, 1.0, 1.0));
    }
}
