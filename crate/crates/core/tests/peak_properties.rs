use beatdiag::metrics::{evaluate, EvalConfig};
use beatdiag::peaks::{default_threshold_grid, local_maxima, pick_peaks, sweep_threshold, PeakConfig};
use beatdiag::{ActivationCurve, BeatAnnotation};
use proptest::prelude::*;

fn curve() -> impl Strategy<Value = ActivationCurve> {
    (prop::collection::vec(0.0f64..=1.0, 1..500), prop::sample::select(vec![43.07, 50.0, 100.0]))
        .prop_map(|(v, fps)| ActivationCurve::new(v, fps, "p").unwrap())
}

fn pulse_train(period: usize, n: usize, height: f64) -> ActivationCurve {
    let v = (0..n)
        .map(|t| {
            let d = (t % period).min(period - t % period) as f64;
            height * (-d * d / 2.0).exp()
        })
        .collect();
    ActivationCurve::new(v, 50.0, "train").unwrap()
}

proptest! {
    #[test]
    fn output_is_increasing_and_separated(act in curve(), th in 0.01f64..0.99, sep in 0.0f64..0.5) {
        let beats = pick_peaks(&act, &PeakConfig { threshold: th, min_separation: sep });
        let t = beats.times();
        for w in t.windows(2) {
            prop_assert!(w[1] > w[0]);
            prop_assert!(w[1] - w[0] >= sep - 1.0 / act.fps() - 1e-9);
        }
        for &x in t {
            let f = (x * act.fps()).round() as usize;
            prop_assert!(act.values()[f] >= th);
        }
    }

    #[test]
    fn raising_threshold_never_adds_peaks(act in curve(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let with_sep = |th| pick_peaks(&act, &PeakConfig { threshold: th, min_separation: 0.0 });
        let low = with_sep(lo);
        let high = with_sep(hi);
        for x in high.times() {
            prop_assert!(low.times().contains(x));
        }
    }

    #[test]
    fn best_threshold_dominates_default(act in curve(), mut beats in prop::collection::vec(0.0f64..10.0, 2..30)) {
        beats.sort_by(f64::total_cmp);
        beats.dedup();
        let reference = BeatAnnotation::new("r", beats);
        let eval = EvalConfig { trim_seconds: 0.0, ..EvalConfig::default() };
        let def = PeakConfig::default();
        let sweep = sweep_threshold(&act, &reference, &default_threshold_grid(), &def, &eval).unwrap();
        let at_default = evaluate(&pick_peaks(&act, &def), &reference.beats, &eval).unwrap();
        prop_assert!(sweep.best.f_measure >= at_default.f_measure);
    }
}

#[test]
fn clean_train_scores_one_below_peak_height() {
    let act = pulse_train(25, 990, 0.9);
    let reference = BeatAnnotation::new("t", (0..40).map(|i| i as f64 * 0.5).collect());
    let eval = EvalConfig { trim_seconds: 0.0, ..EvalConfig::default() };
    for th in default_threshold_grid().into_iter().filter(|&t| t < 0.9) {
        let beats = pick_peaks(&act, &PeakConfig::default().with_threshold(th));
        assert_eq!(evaluate(&beats, &reference.beats, &eval).unwrap().f_measure, 1.0, "threshold {th}");
    }
    assert!(pick_peaks(&act, &PeakConfig::default().with_threshold(0.95)).is_empty());
}

#[test]
fn grid_has_twenty_values() {
    let g = default_threshold_grid();
    assert_eq!(g.len(), 20);
    assert!((g[0] - 0.05).abs() < 1e-12 && (g[18] - 0.95).abs() < 1e-12 && g[19] == 0.98);
}

#[test]
fn plateau_gives_first_frame() {
    assert_eq!(local_maxima(&[0.0, 0.7, 0.7, 0.7, 0.1]), vec![1]);
    assert!(local_maxima(&[0.4, 0.4, 0.4]).is_empty());
}
