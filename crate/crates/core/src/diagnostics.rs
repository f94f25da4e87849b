//! Activation-quality measures, the failure taxonomy, rank correlation and
//! tempo statistics of annotations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use log::warn;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ingest::{BeatAnnotation, TempoEstimate};
use crate::metrics::EvalResult;
use crate::peaks::local_maxima;
use crate::signal::ActivationCurve;

/// Half-width, in frames, of the neighbourhood around each reference beat.
pub const GT_NEIGHBORHOOD: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ActivationDiagnostics {
    pub act_at_gt: f64,
    pub max_activation: f64,
    pub peak_sharpness: f64,
    pub periodicity_strength: f64,
    pub entropy: f64,
    pub false_positive_activation: f64,
}

fn beat_frames(act: &ActivationCurve, reference: &BeatAnnotation) -> Vec<i64> {
    reference.times().iter().map(|&t| act.frame_of(t)).collect()
}

/// Mean over reference beats of the maximum activation within ±2 frames.
pub fn act_at_gt(act: &ActivationCurve, reference: &BeatAnnotation) -> Result<f64> {
    let values = act.values();
    let last = values.len() as i64 - 1;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut skipped = 0usize;
    for f in beat_frames(act, reference) {
        if f < 0 || f > last {
            skipped += 1;
            continue;
        }
        let lo = (f - GT_NEIGHBORHOOD).max(0) as usize;
        let hi = (f + GT_NEIGHBORHOOD).min(last) as usize;
        sum += values[lo..=hi].iter().copied().fold(0.0, f64::max);
        count += 1;
    }
    if skipped > 0 {
        warn!(
            "{}: {skipped} reference beats fall outside the activation curve",
            reference.track_id
        );
    }
    if count == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(sum / count as f64)
}

/// Mean activation over frames more than 2 frames from every reference beat.
pub fn false_positive_activation(act: &ActivationCurve, reference: &BeatAnnotation) -> f64 {
    let mut near = vec![false; act.len()];
    let last = act.len() as i64 - 1;
    for f in beat_frames(act, reference) {
        let lo = (f - GT_NEIGHBORHOOD).max(0);
        let hi = (f + GT_NEIGHBORHOOD).min(last);
        for i in lo..=hi {
            near[i as usize] = true;
        }
    }
    let (sum, n) = act
        .values()
        .iter()
        .zip(&near)
        .filter(|(_, &n)| !n)
        .fold((0.0, 0usize), |(s, c), (&v, _)| (s + v, c + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub const SHARPNESS_THRESHOLD: f64 = 0.1;
pub const SHARPNESS_OFFSET: usize = 3;

/// Mean height of peaks (≥ 0.1) above the mean of the values 3 frames to
/// either side, clipped at 0. Sides beyond the curve are left out.
pub fn peak_sharpness(act: &ActivationCurve) -> f64 {
    let v = act.values();
    let mut total = 0.0;
    let mut count = 0usize;
    for p in local_maxima(v) {
        if v[p] < SHARPNESS_THRESHOLD {
            continue;
        }
        let sides: Vec<f64> = [p.checked_sub(SHARPNESS_OFFSET), Some(p + SHARPNESS_OFFSET)]
            .into_iter()
            .flatten()
            .filter(|&i| i < v.len())
            .map(|i| v[i])
            .collect();
        if sides.is_empty() {
            continue;
        }
        let base = sides.iter().sum::<f64>() / sides.len() as f64;
        total += (v[p] - base).max(0.0);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Beat-period lag range (frames) for 30–215 BPM at `fps`.
pub fn periodicity_lags(fps: f64) -> (usize, usize) {
    let lo = (60.0 * fps / 215.0).round().max(1.0) as usize;
    let hi = (60.0 * fps / 30.0).round() as usize;
    (lo, hi)
}

/// Peak of the normalized autocorrelation of the mean-removed curve over
/// beat-period lags, clipped to [0, 1].
pub fn periodicity_strength(act: &ActivationCurve) -> f64 {
    let v = act.values();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let x: Vec<f64> = v.iter().map(|a| a - mean).collect();
    let energy: f64 = x.iter().map(|a| a * a).sum();
    if energy <= f64::EPSILON * v.len() as f64 {
        return 0.0;
    }
    let (lo, hi) = periodicity_lags(act.fps());
    let hi = hi.min(x.len().saturating_sub(1));
    (lo..=hi)
        .map(|lag| x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / energy)
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

/// Shannon entropy of the curve as a distribution, divided by `ln(len)`.
pub fn activation_entropy(act: &ActivationCurve) -> f64 {
    let v = act.values();
    let total: f64 = v.iter().sum();
    if total <= 0.0 || v.len() < 2 {
        return 0.0;
    }
    let h: f64 = v
        .iter()
        .filter(|&&a| a > 0.0)
        .map(|&a| {
            let p = a / total;
            -p * p.ln()
        })
        .sum();
    (h / (v.len() as f64).ln()).clamp(0.0, 1.0)
}

pub fn diagnose(act: &ActivationCurve, reference: &BeatAnnotation) -> Result<ActivationDiagnostics> {
    Ok(ActivationDiagnostics {
        act_at_gt: act_at_gt(act, reference)?,
        max_activation: act.values().iter().copied().fold(0.0, f64::max),
        peak_sharpness: peak_sharpness(act),
        periodicity_strength: periodicity_strength(act),
        entropy: activation_entropy(act),
        false_positive_activation: false_positive_activation(act, reference),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaxonomyConfig {
    pub good_f: f64,
    pub octave_gap: f64,
    pub continuity_gap: f64,
    pub total_f: f64,
    pub total_amlt: f64,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        TaxonomyConfig {
            good_f: 0.8,
            octave_gap: 0.25,
            continuity_gap: 0.2,
            total_f: 0.3,
            total_amlt: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FailureCategory {
    Good,
    TotalFailure,
    OctaveError,
    ContinuityError,
    Other,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 5] = [
        FailureCategory::Good,
        FailureCategory::TotalFailure,
        FailureCategory::OctaveError,
        FailureCategory::ContinuityError,
        FailureCategory::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FailureCategory::Good => "good",
            FailureCategory::TotalFailure => "total_failure",
            FailureCategory::OctaveError => "octave_error",
            FailureCategory::ContinuityError => "continuity_error",
            FailureCategory::Other => "other",
        }
    }
}

impl fmt::Display for FailureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Checked in order: good, total failure, octave, continuity, other.
pub fn classify_failure(r: &EvalResult, cfg: &TaxonomyConfig) -> FailureCategory {
    if r.f_measure >= cfg.good_f {
        FailureCategory::Good
    } else if r.f_measure < cfg.total_f && r.amlt < cfg.total_amlt {
        FailureCategory::TotalFailure
    } else if r.amlt - r.f_measure > cfg.octave_gap {
        FailureCategory::OctaveError
    } else if r.cmlt - r.cmlc > cfg.continuity_gap {
        FailureCategory::ContinuityError
    } else {
        FailureCategory::Other
    }
}

/// Joint category over several systems: a track is `good` only if every
/// system rates it good, and otherwise takes the category of its worst
/// system (lowest F).
pub fn classify_intersection(results: &[EvalResult], cfg: &TaxonomyConfig) -> Option<FailureCategory> {
    let worst = results
        .iter()
        .min_by(|a, b| a.f_measure.total_cmp(&b.f_measure))?;
    Some(classify_failure(worst, cfg))
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
}

/// Spearman rank correlation with a two-sided p-value from the t
/// approximation with `n - 2` degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::DegenerateInput(format!(
            "length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!("need at least 3 pairs, got {n}")));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("zero rank variance".into()));
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / ((1.0 + rho) * (1.0 - rho))).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Correlation { rho, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TempoStats {
    pub gt_bpm: f64,
    pub ibi_cv: f64,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

/// Tempo from the median inter-beat interval and the IBI coefficient of
/// variation (population standard deviation over mean).
pub fn tempo_stats(reference: &BeatAnnotation) -> Result<TempoStats> {
    if reference.beats.len() < 3 {
        return Err(Error::InsufficientReference(format!(
            "{}: tempo statistics need at least 3 beats",
            reference.track_id
        )));
    }
    let ibi = reference.beats.intervals();
    let n = ibi.len() as f64;
    let mean = ibi.iter().sum::<f64>() / n;
    let var = ibi.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok(TempoStats {
        gt_bpm: 60.0 / median(&ibi).expect("non-empty"),
        ibi_cv: var.sqrt() / mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TempoLabel {
    Correct,
    Double,
    Half,
    Other,
}

impl TempoLabel {
    pub fn name(self) -> &'static str {
        match self {
            TempoLabel::Correct => "correct",
            TempoLabel::Double => "double",
            TempoLabel::Half => "half",
            TempoLabel::Other => "other",
        }
    }
}

pub const TEMPO_TOLERANCE: f64 = 0.08;

pub fn label_tempo(estimate: f64, truth: f64, tol: f64) -> TempoLabel {
    let within = |target: f64| (estimate - target).abs() / target <= tol;
    if within(truth) {
        TempoLabel::Correct
    } else if within(2.0 * truth) {
        TempoLabel::Double
    } else if within(truth / 2.0) {
        TempoLabel::Half
    } else {
        TempoLabel::Other
    }
}

/// Ground-truth tempo bands used to break down accuracy.
pub const BPM_BANDS: [(&str, f64, f64); 5] = [
    ("<55", 0.0, 55.0),
    ("55-70", 55.0, 70.0),
    ("70-90", 70.0, 90.0),
    ("90-120", 90.0, 120.0),
    (">=120", 120.0, f64::INFINITY),
];

pub fn bpm_band(bpm: f64) -> &'static str {
    BPM_BANDS
        .iter()
        .find(|(_, lo, hi)| bpm >= *lo && bpm < *hi)
        .map(|b| b.0)
        .unwrap_or(">=120")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelRates {
    pub n: usize,
    pub counts: BTreeMap<TempoLabel, usize>,
}

impl LabelRates {
    pub fn rate(&self, label: TempoLabel) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            *self.counts.get(&label).unwrap_or(&0) as f64 / self.n as f64
        }
    }

    fn add(&mut self, label: TempoLabel) {
        self.n += 1;
        *self.counts.entry(label).or_default() += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TempoAccuracyReport {
    pub per_track: Vec<(String, f64, f64, TempoLabel)>,
    pub overall: LabelRates,
    pub by_band: BTreeMap<&'static str, LabelRates>,
    pub unmatched: Vec<String>,
}

pub fn tempo_accuracy(
    estimates: &[TempoEstimate],
    refs: &[BeatAnnotation],
    tol: f64,
) -> Result<TempoAccuracyReport> {
    let by_id: HashMap<&str, &BeatAnnotation> =
        refs.iter().map(|r| (r.track_id.as_str(), r)).collect();
    let mut report = TempoAccuracyReport::default();
    let mut sorted: Vec<&TempoEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| a.track_id.cmp(&b.track_id));
    for est in sorted {
        let Some(reference) = by_id.get(est.track_id.as_str()) else {
            warn!("tempo estimate for unknown track `{}`", est.track_id);
            report.unmatched.push(est.track_id.clone());
            continue;
        };
        let gt = tempo_stats(reference)?.gt_bpm;
        let label = label_tempo(est.bpm, gt, tol);
        report.overall.add(label);
        report.by_band.entry(bpm_band(gt)).or_default().add(label);
        report.per_track.push((est.track_id.clone(), est.bpm, gt, label));
    }
    Ok(report)
}
