//! Beat evaluation: F-measure and the four continuity scores.
//!
//! Semantics follow the common beat-evaluation reference implementation:
//! strict `<` tolerances for continuity, nearest-annotation assignment with
//! "used" bookkeeping, and continuity denominators of
//! `max(|reference variation|, |estimate|)`.

use crate::error::{Error, Result};
use crate::signal::BeatSequence;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub f_window: f64,
    pub continuity_phase_tol: f64,
    pub continuity_tempo_tol: f64,
    pub trim_seconds: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            f_window: 0.07,
            continuity_phase_tol: 0.175,
            continuity_tempo_tol: 0.175,
            trim_seconds: 0.0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.f_window, self.continuity_phase_tol, self.continuity_tempo_tol];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("evaluation tolerances must be positive".into()));
        }
        if !(self.trim_seconds.is_finite() && self.trim_seconds >= 0.0) {
            return Err(Error::Config("trim must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct EvalResult {
    pub f_measure: f64,
    pub cmlc: f64,
    pub cmlt: f64,
    pub amlc: f64,
    pub amlt: f64,
    pub n_ref: usize,
    pub n_est: usize,
}

/// Maximum-cardinality one-to-one matching of estimates to references within
/// `window` seconds, as `(ref index, est index)` pairs.
///
/// Both inputs sorted. On a line with a symmetric window the greedy sweep
/// (each reference takes the earliest still-unmatched estimate it can reach)
/// is optimal.
pub fn match_beats(est: &[f64], reference: &[f64], window: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut j = 0;
    for (i, &r) in reference.iter().enumerate() {
        while j < est.len() && est[j] < r && (r - est[j]) > window {
            j += 1;
        }
        if j < est.len() && (est[j] - r).abs() <= window {
            pairs.push((i, j));
            j += 1;
        }
    }
    pairs
}

pub fn f_measure(est: &BeatSequence, reference: &BeatSequence, cfg: &EvalConfig) -> f64 {
    let (est, reference) = trim_pair(est, reference, cfg);
    f_measure_untrimmed(est.times(), reference.times(), cfg.f_window)
}

fn f_measure_untrimmed(est: &[f64], reference: &[f64], window: f64) -> f64 {
    match (est.is_empty(), reference.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let matched = match_beats(est, reference, window).len() as f64;
    let precision = matched / est.len() as f64;
    let recall = matched / reference.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn trim_pair(est: &BeatSequence, reference: &BeatSequence, cfg: &EvalConfig) -> (BeatSequence, BeatSequence) {
    if cfg.trim_seconds > 0.0 {
        (est.trimmed(cfg.trim_seconds), reference.trimmed(cfg.trim_seconds))
    } else {
        (est.clone(), reference.clone())
    }
}

/// `(cmlc, cmlt, amlc, amlt)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Continuity {
    pub cmlc: f64,
    pub cmlt: f64,
    pub amlc: f64,
    pub amlt: f64,
}

pub fn continuity(est: &BeatSequence, reference: &BeatSequence, cfg: &EvalConfig) -> Result<Continuity> {
    let (est, reference) = trim_pair(est, reference, cfg);
    continuity_untrimmed(est.times(), reference.times(), cfg)
}

fn continuity_untrimmed(est: &[f64], reference: &[f64], cfg: &EvalConfig) -> Result<Continuity> {
    if reference.len() < 2 {
        return Err(Error::InsufficientReference(format!(
            "continuity needs at least 2 reference beats, got {}",
            reference.len()
        )));
    }
    if est.len() < 2 {
        return Ok(Continuity::default());
    }
    let scores: Vec<(f64, f64)> = reference_variations(reference)
        .iter()
        .map(|var| continuity_against(est, var, cfg))
        .collect();
    let (cmlc, cmlt) = scores[0];
    Ok(Continuity {
        cmlc,
        cmlt,
        amlc: scores.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max),
        amlt: scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Annotated level, off-beat, double tempo, and the two half-tempo phases.
pub fn reference_variations(reference: &[f64]) -> [Vec<f64>; 5] {
    let mut double = Vec::with_capacity(2 * reference.len());
    for w in reference.windows(2) {
        double.push(w[0]);
        double.push(0.5 * (w[0] + w[1]));
    }
    if let Some(&last) = reference.last() {
        double.push(last);
    }
    let off_beat = double.iter().skip(1).step_by(2).copied().collect();
    let half_odd = reference.iter().step_by(2).copied().collect();
    let half_even = reference.iter().skip(1).step_by(2).copied().collect();
    [reference.to_vec(), off_beat, double, half_odd, half_even]
}

fn continuity_against(est: &[f64], reference: &[f64], cfg: &EvalConfig) -> (f64, f64) {
    let n = reference.len().max(est.len());
    let mut used = vec![false; reference.len()];
    let mut success = vec![false; est.len()];

    for (m, &e) in est.iter().enumerate() {
        // nearest annotation, first index on ties
        let (nearest, min_diff) = reference
            .iter()
            .enumerate()
            .map(|(i, &r)| (i, (e - r).abs()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if used[nearest] {
            continue;
        }
        let (ref_interval, est_interval) = if m == 0 || nearest == 0 {
            let ref_interval = if nearest + 1 < reference.len() {
                reference[nearest + 1] - reference[nearest]
            } else if nearest > 0 {
                reference[nearest] - reference[nearest - 1]
            } else {
                0.0
            };
            let est_interval = if m + 1 < est.len() {
                est[m + 1] - est[m]
            } else {
                est[m] - est[m - 1]
            };
            (ref_interval, est_interval)
        } else {
            (reference[nearest] - reference[nearest - 1], est[m] - est[m - 1])
        };
        if ref_interval == 0.0 {
            continue;
        }
        let phase = (min_diff / ref_interval).abs();
        let period = (1.0 - est_interval / ref_interval).abs();
        if phase < cfg.continuity_phase_tol && period < cfg.continuity_tempo_tol {
            used[nearest] = true;
            success[m] = true;
        }
    }

    let mut longest = 0usize;
    let mut run = 0usize;
    for &ok in &success {
        run = if ok { run + 1 } else { 0 };
        longest = longest.max(run);
    }
    let total = success.iter().filter(|&&ok| ok).count();
    (longest as f64 / n as f64, total as f64 / n as f64)
}

/// All five metrics for one estimate/reference pair.
pub fn evaluate(est: &BeatSequence, reference: &BeatSequence, cfg: &EvalConfig) -> Result<EvalResult> {
    let (est, reference) = trim_pair(est, reference, cfg);
    let f = f_measure_untrimmed(est.times(), reference.times(), cfg.f_window);
    let c = continuity_untrimmed(est.times(), reference.times(), cfg)?;
    Ok(EvalResult {
        f_measure: f,
        cmlc: c.cmlc,
        cmlt: c.cmlt,
        amlc: c.amlc,
        amlt: c.amlt,
        n_ref: reference.len(),
        n_est: est.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize, period: f64, start: f64) -> BeatSequence {
        BeatSequence::new((0..n).map(|i| start + i as f64 * period).collect())
    }

    #[test]
    fn matching_windows() {
        let r = grid(10, 0.5, 1.0);
        assert_eq!(match_beats(r.times(), r.times(), 0.07).len(), 10);
        assert_eq!(match_beats(r.shifted(0.05).times(), r.times(), 0.07).len(), 10);
        assert_eq!(match_beats(r.shifted(0.10).times(), r.times(), 0.07).len(), 0);
    }

    #[test]
    fn f_measure_half() {
        let r = grid(10, 0.5, 1.0);
        let e = BeatSequence::new(r.times().iter().step_by(2).copied().collect());
        assert_relative_eq!(f_measure(&e, &r, &EvalConfig::default()), 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(f_measure(&r, &r, &EvalConfig::default()), 1.0);
    }

    #[test]
    fn f_measure_empty_cases() {
        let cfg = EvalConfig::default();
        let empty = BeatSequence::default();
        let r = grid(4, 0.5, 1.0);
        assert_eq!(f_measure(&empty, &empty, &cfg), 1.0);
        assert_eq!(f_measure(&empty, &r, &cfg), 0.0);
        assert_eq!(f_measure(&r, &empty, &cfg), 0.0);
    }

    #[test]
    fn perfect_continuity() {
        let r = grid(20, 0.5, 1.0);
        let c = continuity(&r, &r, &EvalConfig::default()).unwrap();
        assert_eq!((c.cmlc, c.cmlt, c.amlc, c.amlt), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn double_tempo_is_aml_only() {
        let r = grid(20, 0.5, 1.0);
        let e = grid(39, 0.25, 1.0);
        let c = continuity(&e, &r, &EvalConfig::default()).unwrap();
        assert!(c.cmlt < 1e-9, "{c:?}");
        assert_relative_eq!(c.amlt, 1.0);
    }

    #[test]
    fn offbeat_is_aml_only() {
        let r = grid(20, 0.5, 1.0);
        let e = grid(19, 0.5, 1.25);
        let c = continuity(&e, &r, &EvalConfig::default()).unwrap();
        assert_eq!(c.cmlt, 0.0);
        assert_relative_eq!(c.amlt, 1.0);
    }

    #[test]
    fn short_reference_errors() {
        let r = grid(1, 0.5, 1.0);
        assert!(matches!(
            continuity(&r, &r, &EvalConfig::default()),
            Err(Error::InsufficientReference(_))
        ));
    }

    #[test]
    fn empty_estimate_scores_zero() {
        let r = grid(10, 0.5, 1.0);
        let res = evaluate(&BeatSequence::default(), &r, &EvalConfig::default()).unwrap();
        assert_eq!(res.f_measure, 0.0);
        assert_eq!((res.cmlc, res.cmlt, res.amlc, res.amlt), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn trim_drops_early_beats() {
        let r = grid(20, 0.5, 0.5);
        // wrong only in the first five seconds
        let mut e: Vec<f64> = r.times().to_vec();
        for t in e.iter_mut().filter(|t| **t < 5.0) {
            *t += 0.2;
        }
        let e = BeatSequence::new(e);
        let full = evaluate(&e, &r, &EvalConfig::default()).unwrap();
        let trimmed = evaluate(
            &e,
            &r,
            &EvalConfig {
                trim_seconds: 5.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(full.f_measure < 1.0);
        assert_eq!(trimmed.f_measure, 1.0);
        assert_eq!(trimmed.n_ref, 11);
    }

    #[test]
    fn variations_shape() {
        let v = reference_variations(&[0.0, 1.0, 2.0]);
        assert_eq!(v[1], vec![0.5, 1.5]);
        assert_eq!(v[2], vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(v[3], vec![0.0, 2.0]);
        assert_eq!(v[4], vec![1.0]);
    }
}
