//! Threshold peak picking on raw activation curves.

use crate::error::{Error, Result};
use crate::ingest::BeatAnnotation;
use crate::metrics::{evaluate, EvalConfig, EvalResult};
use crate::signal::{ActivationCurve, BeatSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakConfig {
    pub threshold: f64,
    /// Seconds.
    pub min_separation: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        PeakConfig {
            threshold: 0.5,
            min_separation: 0.1,
        }
    }
}

impl PeakConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "peak threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if !(self.min_separation.is_finite() && self.min_separation >= 0.0) {
            return Err(Error::Config("min separation must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

/// Frames of local maxima: `>=` both neighbours and `>` at least one. A
/// plateau yields one peak at its first frame.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        let left_lower = i == 0 || values[i - 1] < values[i];
        let right_lower = j + 1 == n || values[j + 1] < values[i];
        let rises = (i > 0 && values[i - 1] < values[i]) || (j + 1 < n && values[j + 1] < values[i]);
        if left_lower && right_lower && rises {
            peaks.push(i);
        }
        i = j + 1;
    }
    peaks
}

pub fn pick_peaks(act: &ActivationCurve, cfg: &PeakConfig) -> BeatSequence {
    let values = act.values();
    let candidates: Vec<usize> = local_maxima(values)
        .into_iter()
        .filter(|&f| values[f] >= cfg.threshold)
        .collect();

    // Greedy suppression: strongest first, earlier frame on ties.
    let mut order = candidates.clone();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let min_gap = cfg.min_separation * act.fps();
    let mut kept: Vec<usize> = Vec::new();
    for f in order {
        if kept.iter().all(|&k| (k.abs_diff(f) as f64) >= min_gap) {
            kept.push(f);
        }
    }
    kept.sort_unstable();
    BeatSequence::new(kept.into_iter().map(|f| f as f64 / act.fps()).collect())
}

/// The default sweep: 0.05 to 0.95 in steps of 0.05, then 0.98.
pub fn default_threshold_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    grid.push(0.98);
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub results: Vec<(f64, EvalResult)>,
    pub best_threshold: f64,
    pub best: EvalResult,
}

pub fn sweep_threshold(
    act: &ActivationCurve,
    reference: &BeatAnnotation,
    thresholds: &[f64],
    base: &PeakConfig,
    eval: &EvalConfig,
) -> Result<ThresholdSweep> {
    if thresholds.is_empty() {
        return Err(Error::Config("threshold sweep needs at least one value".into()));
    }
    let mut results = Vec::with_capacity(thresholds.len());
    for &th in thresholds {
        let beats = pick_peaks(act, &base.with_threshold(th));
        results.push((th, evaluate(&beats, &reference.beats, eval)?));
    }
    let (best_threshold, best) = results
        .iter()
        .copied()
        .fold(None::<(f64, EvalResult)>, |acc, cur| match acc {
            Some(b) if b.1.f_measure > cur.1.f_measure => Some(b),
            Some(b) if b.1.f_measure == cur.1.f_measure && b.0 <= cur.0 => Some(b),
            _ => Some(cur),
        })
        .expect("non-empty");
    Ok(ThresholdSweep {
        results,
        best_threshold,
        best,
    })
}
