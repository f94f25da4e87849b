use beatdiag::dbn::{decode, decode_constrained, viterbi, DbnConfig, StateSpace, TempoConstraint};
use beatdiag::ActivationCurve;
use proptest::prelude::*;

/// Gaussian bumps at a constant, possibly fractional, period.
fn clean_train(period_frames: f64, n_frames: usize, fps: f64) -> ActivationCurve {
    let values = (0..n_frames)
        .map(|t| {
            let phase = (t as f64 / period_frames).fract() * period_frames;
            let d = phase.min(period_frames - phase);
            (-d * d / 2.0).exp()
        })
        .collect();
    ActivationCurve::new(values, fps, "clean").unwrap()
}

fn ibi_variance(times: &[f64]) -> f64 {
    if times.len() < 3 {
        return 0.0;
    }
    let ibis: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let m = ibis.iter().sum::<f64>() / ibis.len() as f64;
    ibis.iter().map(|x| (x - m).powi(2)).sum::<f64>() / ibis.len() as f64
}

fn noisy_curve() -> impl Strategy<Value = ActivationCurve> {
    (prop::collection::vec(0.0f64..=1.0, 50..400), prop::sample::select(vec![43.07, 50.0, 100.0]))
        .prop_map(|(v, fps)| ActivationCurve::new(v, fps, "noise").unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, max_global_rejects: 4096, ..ProptestConfig::default() })]

    /// Beats on a bump cut off by either end of the curve are excluded.
    #[test]
    fn ibi_variance_non_increasing_in_lambda(
        period in 12usize..=86,
        offset in 0usize..86,
        fps in prop::sample::select(vec![43.07, 50.0, 100.0]),
    ) {
        let n = period * 16;
        let v: Vec<f64> = (0..n)
            .map(|t| {
                let d = ((t + period - offset % period) % period) as f64;
                let d = d.min(period as f64 - d);
                (-d * d / 2.0).exp()
            })
            .collect();
        let act = ActivationCurve::new(v, fps, "clean").unwrap();
        let base = DbnConfig::default().with_bpm_range(30.0, 215.0);
        let space = StateSpace::build(&base, fps).unwrap();
        prop_assume!(space.intervals().contains(&period));
        let mut last = f64::INFINITY;
        for lambda in [1.0, 5.0, 20.0, 100.0, 500.0] {
            let beats = decode(&act, &base.with_lambda(lambda)).unwrap();
            let margin = period as f64 / 2.0 / fps;
            let end = n as f64 / fps;
            let interior: Vec<f64> = beats.times().iter().copied().filter(|&t| t >= margin && t <= end - margin).collect();
            let v = ibi_variance(&interior);
            prop_assert!(v <= last + 1e-12, "period {period}: variance {v} at lambda {lambda} after {last}");
            last = v;
        }
    }

    #[test]
    fn decoded_intervals_stay_in_tempo_range(act in noisy_curve(), lo in 40.0f64..120.0, span in 10.0f64..100.0) {
        let cfg = DbnConfig { correct_beats: false, ..DbnConfig::default().with_bpm_range(lo, lo + span) };
        let space = StateSpace::build(&cfg, act.fps()).unwrap();
        let tau_min = *space.intervals().first().unwrap() as i64;
        let tau_max = *space.intervals().last().unwrap() as i64;
        let beats = decode(&act, &cfg).unwrap();
        let frames: Vec<i64> = beats.times().iter().map(|t| (t * act.fps()).round() as i64).collect();
        for w in frames.windows(2).skip(1) {
            let d = w[1] - w[0];
            prop_assert!(d >= tau_min - 1 && d <= tau_max + 1, "interval {d} outside [{tau_min}, {tau_max}]");
        }
    }

    #[test]
    fn decoding_is_deterministic(act in noisy_curve()) {
        let cfg = DbnConfig::default();
        let a = decode(&act, &cfg).unwrap();
        let b = std::thread::spawn({
            let act = act.clone();
            move || decode(&act, &cfg).unwrap()
        })
        .join()
        .unwrap();
        let bits = |s: &beatdiag::BeatSequence| s.times().iter().map(|t| t.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn full_window_constraint_equals_plain_decode(act in noisy_curve(), center in 111.0f64..215.0) {
        let cfg = DbnConfig::default().with_bpm_range(30.0, 215.0);
        let wide = TempoConstraint { center_bpm: center, window_fraction: 0.95 };
        prop_assert_eq!(wide.effective_range().unwrap(), (30.0, 215.0));
        prop_assert_eq!(decode_constrained(&act, &cfg, &wide).unwrap(), decode(&act, &cfg).unwrap());
    }

    #[test]
    fn path_score_is_finite_and_path_valid(act in noisy_curve()) {
        let cfg = DbnConfig::default();
        let (space, path) = viterbi(&act, &cfg).unwrap();
        prop_assert!(path.log_score.is_finite());
        for w in path.states.windows(2) {
            let (k0, p0) = space.decompose(w[0]);
            let (k1, p1) = space.decompose(w[1]);
            if p0 + 1 < space.intervals()[k0] {
                prop_assert_eq!((k1, p1), (k0, p0 + 1));
            } else {
                prop_assert_eq!(p1, 0);
            }
        }
    }
}

#[test]
fn constant_tempo_locks_on_every_lambda() {
    let act = clean_train(25.0, 1000, 50.0);
    for lambda in [1.0, 100.0, 500.0] {
        let beats = decode(&act, &DbnConfig::default().with_lambda(lambda)).unwrap();
        assert!(ibi_variance(beats.times()) < 1e-18, "lambda {lambda}");
        assert_eq!(beats.len(), 40);
    }
}

/// A period that is not a whole number of frames breaks monotonicity: a
/// small λ follows the 35/36-frame alternation, a larger one holds 36 and
/// then corrects with a longer jump.
#[test]
fn fractional_period_is_outside_the_monotone_regime() {
    let act = clean_train(60.0 * 50.0 / 83.6159676535332, 574, 50.0);
    let base = DbnConfig { correct_beats: false, ..DbnConfig::default() };
    let v5 = ibi_variance(decode(&act, &base.with_lambda(5.0)).unwrap().times());
    let v20 = ibi_variance(decode(&act, &base.with_lambda(20.0)).unwrap().times());
    assert!(v20 > v5);
}
