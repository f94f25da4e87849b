//! Corpus-level experiments built from the decoder, picker, metrics and
//! diagnostics: ground-truth activation synthesis, λ and threshold sweeps,
//! tempo-constrained decoding, peak-vs-DBN comparison, the difficulty-axis
//! table and the failure taxonomy.
//!
//! Tracks are processed in parallel; results are collected in track-id
//! order before any reduction, so output does not depend on thread count.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::dbn::{decode, decode_constrained, BeatRegion, DbnConfig, TempoConstraint};
use crate::diagnostics::{
    classify_failure, classify_intersection, diagnose, label_tempo, median, spearman,
    tempo_accuracy, tempo_stats, ActivationDiagnostics, FailureCategory, TaxonomyConfig,
    TempoLabel, TempoStats, BPM_BANDS,
};
use crate::error::{Error, Result};
use crate::ingest::{Axis, BeatAnnotation, Dataset, TempoEstimate, TrackRecord};
use crate::metrics::{evaluate, EvalConfig, EvalResult};
use crate::peaks::{default_threshold_grid, pick_peaks, sweep_threshold, PeakConfig};
use crate::report::{fmt3, fmt_opt3, EvalMeans, GroupBy, ReportRow, RunReport, Table};
use crate::signal::{ActivationCurve, BeatSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub sigma_frames: f64,
    pub fps: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sigma_frames: 2.0,
            fps: 43.07,
        }
    }
}

/// Unit-height Gaussians centred on every reference beat, combined by max,
/// running one second past the last beat.
pub fn synthesize_gt_activation(reference: &BeatAnnotation, cfg: &SynthConfig) -> Result<ActivationCurve> {
    if !(cfg.sigma_frames.is_finite() && cfg.sigma_frames > 0.0) {
        return Err(Error::Config(format!("sigma must be positive, got {}", cfg.sigma_frames)));
    }
    let beats = reference.times();
    let Some(&last) = beats.last() else {
        return Err(Error::InsufficientReference(format!(
            "{}: cannot synthesize an activation without beats",
            reference.track_id
        )));
    };
    let n = ((last + 1.0) * cfg.fps).ceil() as usize;
    let centres: Vec<f64> = beats.iter().map(|b| b * cfg.fps).collect();
    let two_var = 2.0 * cfg.sigma_frames * cfg.sigma_frames;
    // The maximum over Gaussians of equal width is the one with the nearest
    // centre, so a forward sweep over sorted centres suffices.
    let mut k = 0;
    let values = (0..n)
        .map(|t| {
            let t = t as f64;
            while k + 1 < centres.len() && (centres[k + 1] - t).abs() <= (centres[k] - t).abs() {
                k += 1;
            }
            let d = t - centres[k];
            (-d * d / two_var).exp()
        })
        .collect();
    ActivationCurve::new(values, cfg.fps, "gt")
}

/// 13 values spanning 1..500, including every value the sweep is usually
/// reported at.
pub fn default_lambda_grid() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 50.0, 80.0, 100.0, 150.0, 200.0, 300.0, 500.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lambdas: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            lambdas: default_lambda_grid(),
            thresholds: default_threshold_grid(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, list) in [("lambdas", &self.lambdas), ("thresholds", &self.thresholds)] {
            if list.is_empty() {
                return Err(Error::Config(format!("sweep {name} must not be empty")));
            }
            if list.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Config(format!("sweep {name} must be positive")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!("sweep {name} must be ascending")));
            }
        }
        Ok(())
    }
}

/// Shared parameters for every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentContext {
    pub dbn: DbnConfig,
    pub peaks: PeakConfig,
    pub eval: EvalConfig,
    pub sweep: SweepSpec,
    pub synth: SynthConfig,
    pub taxonomy: TaxonomyConfig,
    /// Lower BPM limit of the widened decoder used by the bottleneck,
    /// λ-sweep and min-BPM experiments.
    pub wide_min_bpm: f64,
    pub tempo_window: f64,
    pub tempo_tolerance: f64,
    /// ΔF below `-hurt_margin` counts as worsened, above as improved.
    pub hurt_margin: f64,
}

impl Default for ExperimentContext {
    fn default() -> Self {
        ExperimentContext {
            dbn: DbnConfig::default(),
            peaks: PeakConfig::default(),
            eval: EvalConfig::default(),
            sweep: SweepSpec::default(),
            synth: SynthConfig::default(),
            taxonomy: TaxonomyConfig::default(),
            wide_min_bpm: 30.0,
            tempo_window: 0.20,
            tempo_tolerance: crate::diagnostics::TEMPO_TOLERANCE,
            hurt_margin: 0.01,
        }
    }
}

impl ExperimentContext {
    pub fn wide_dbn(&self) -> DbnConfig {
        DbnConfig {
            min_bpm: self.wide_min_bpm,
            ..self.dbn
        }
    }
}

/// Where a track's activation comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActivationSource {
    /// A loaded activation with this source label.
    External(String),
    /// Gaussians synthesized from the track's own annotation.
    GroundTruth,
}

impl ActivationSource {
    pub fn parse(s: &str) -> Self {
        if s == "gt" {
            ActivationSource::GroundTruth
        } else {
            ActivationSource::External(s.to_string())
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ActivationSource::External(l) => l,
            ActivationSource::GroundTruth => "gt",
        }
    }

    pub fn curve(&self, track: &TrackRecord, synth: &SynthConfig) -> std::result::Result<ActivationCurve, String> {
        match self {
            ActivationSource::External(label) => track
                .activations
                .get(label)
                .cloned()
                .ok_or_else(|| format!("no `{label}` activation")),
            ActivationSource::GroundTruth => {
                let ann = track.annotation.as_ref().ok_or("no annotation")?;
                synthesize_gt_activation(ann, synth).map_err(|e| e.to_string())
            }
        }
    }
}

type Outcome<T> = std::result::Result<T, String>;

/// Errors that exclude one track rather than abort the run.
fn soft(e: Error) -> Result<String> {
    match e {
        Error::InsufficientReference(_)
        | Error::NoOverlap
        | Error::Constraint(_)
        | Error::DegenerateInput(_) => Ok(e.to_string()),
        other => Err(other),
    }
}

/// Runs `f` over annotated tracks in parallel, returning successes in
/// track-id order and recording skips on `report`.
fn per_track<'a, T, F>(ds: &'a Dataset, report: &mut RunReport, f: F) -> Result<Vec<(&'a TrackRecord, T)>>
where
    T: Send,
    F: Fn(&TrackRecord, &BeatAnnotation) -> Result<Outcome<T>> + Sync,
{
    let results: Vec<(&TrackRecord, Result<Outcome<T>>)> = ds
        .tracks
        .par_iter()
        .filter_map(|t| t.annotation.as_ref().map(|a| (t, a)))
        .map(|(t, a)| {
            let r = match f(t, a) {
                Err(e) => soft(e).map(Err),
                ok => ok,
            };
            (t, r)
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (track, r) in results {
        match r? {
            Ok(v) => out.push((track, v)),
            Err(reason) => report.skipped.push((track.track_id.clone(), reason)),
        }
    }
    Ok(out)
}

fn eval_row(track: &TrackRecord, system: &str, config: String, eval: EvalResult, ctx: &ExperimentContext) -> ReportRow {
    let mut row = ReportRow::new(track, system, config);
    row.eval = Some(eval);
    row.category = Some(classify_failure(&eval, &ctx.taxonomy));
    row.tempo = track.annotation.as_ref().and_then(|a| tempo_stats(a).ok());
    row
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Linear-interpolated quantile, `q` in [0, 1].
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

fn dbn_label(cfg: &DbnConfig) -> String {
    let mut label = format!(
        "min_bpm={};max_bpm={};lambda={};obs_lambda={};correct={}",
        cfg.min_bpm, cfg.max_bpm, cfg.transition_lambda, cfg.observation_lambda, cfg.correct_beats
    );
    if cfg.beat_region != BeatRegion::Round {
        label.push_str(";beat_region=");
        label.push_str(cfg.beat_region.name());
    }
    label
}

// ---------------------------------------------------------------------------
// dataset statistics

pub const HISTOGRAM_BIN_BPM: f64 = 5.0;
pub const DEFAULT_MIN_BPM_MARKER: f64 = 55.0;

/// Tempo histogram with 5-BPM bins and a column flagging bins left of the
/// default 55 BPM decoder floor.
pub fn bpm_histogram(bpms: &[f64]) -> Table {
    let mut t = Table::new("bpm_histogram", &["bin_lo", "bin_hi", "count", "left_of_55"]);
    if bpms.is_empty() {
        return t;
    }
    let lo = (bpms.iter().copied().fold(f64::INFINITY, f64::min) / HISTOGRAM_BIN_BPM).floor();
    let hi = (bpms.iter().copied().fold(0.0, f64::max) / HISTOGRAM_BIN_BPM).floor();
    for b in lo as i64..=hi as i64 {
        let bin_lo = b as f64 * HISTOGRAM_BIN_BPM;
        let bin_hi = bin_lo + HISTOGRAM_BIN_BPM;
        let count = bpms.iter().filter(|&&x| x >= bin_lo && x < bin_hi).count();
        t.push(vec![
            format!("{bin_lo}"),
            format!("{bin_hi}"),
            count.to_string(),
            u8::from(bin_hi <= DEFAULT_MIN_BPM_MARKER).to_string(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub n: usize,
    pub median_bpm: f64,
    pub q1_bpm: f64,
    pub q3_bpm: f64,
    pub below_55: usize,
    pub below_60: usize,
    pub median_ibi_cv: f64,
}

pub fn dataset_stats(ds: &Dataset) -> Result<(DatasetStats, RunReport)> {
    let mut report = RunReport::new("dataset-stats");
    let stats = per_track(ds, &mut report, |_, a| Ok(Ok(tempo_stats(a)?)))?;
    let bpms: Vec<f64> = stats.iter().map(|(_, s)| s.gt_bpm).collect();
    let cvs: Vec<f64> = stats.iter().map(|(_, s)| s.ibi_cv).collect();
    for (track, s) in &stats {
        let mut row = ReportRow::new(track, "annotation", "");
        row.tempo = Some(*s);
        report.rows.push(row);
    }
    let summary = DatasetStats {
        n: stats.len(),
        median_bpm: median(&bpms).unwrap_or(f64::NAN),
        q1_bpm: quantile(&bpms, 0.25).unwrap_or(f64::NAN),
        q3_bpm: quantile(&bpms, 0.75).unwrap_or(f64::NAN),
        below_55: bpms.iter().filter(|&&b| b < 55.0).count(),
        below_60: bpms.iter().filter(|&&b| b < 60.0).count(),
        median_ibi_cv: median(&cvs).unwrap_or(f64::NAN),
    };

    let mut t = Table::new(
        "dataset",
        &["n", "median_bpm", "q1_bpm", "q3_bpm", "below_55", "below_60", "median_ibi_cv"],
    );
    t.push(vec![
        summary.n.to_string(),
        format!("{:.1}", summary.median_bpm),
        format!("{:.1}", summary.q1_bpm),
        format!("{:.1}", summary.q3_bpm),
        summary.below_55.to_string(),
        summary.below_60.to_string(),
        fmt3(summary.median_ibi_cv),
    ]);
    report.tables.push(t);

    let mut tags: BTreeMap<&str, usize> = BTreeMap::new();
    let mut axes: BTreeMap<Axis, usize> = BTreeMap::new();
    for track in &ds.tracks {
        for tag in &track.metadata.canonical_tags {
            *tags.entry(tag).or_default() += 1;
        }
        for &a in &track.metadata.axes {
            *axes.entry(a).or_default() += 1;
        }
    }
    let mut tt = Table::new("tags", &["tag", "tracks"]);
    for (tag, n) in tags {
        tt.push(vec![tag.to_string(), n.to_string()]);
    }
    report.tables.push(tt);
    let mut at = Table::new("axes", &["axis", "tracks"]);
    for (a, n) in axes {
        at.push(vec![a.to_string(), n.to_string()]);
    }
    report.tables.push(at);
    if !ds.tag_residue.is_empty() {
        let mut rt = Table::new("tag_residue", &["raw_tag", "count"]);
        for (tag, n) in &ds.tag_residue {
            rt.push(vec![tag.clone(), n.to_string()]);
        }
        report.tables.push(rt);
    }

    report
        .figures
        .push(("fig1_bpm_histogram.csv".into(), bpm_histogram(&bpms)));
    report.finish(&[]);
    Ok((summary, report))
}

// ---------------------------------------------------------------------------
// activation bottleneck

#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckRow {
    pub dataset: String,
    pub n: usize,
    pub median_ibi_cv: f64,
    pub real_peak_f: Option<f64>,
    pub real_dbn_f: Option<f64>,
    pub gt_dbn_f: f64,
    pub gap: Option<f64>,
    pub gt_below_half: usize,
}

struct BottleneckTrack {
    cv: Option<f64>,
    gt: EvalResult,
    real: Option<(EvalResult, EvalResult)>,
}

/// GT-activation vs real-activation decoding for each dataset; the real
/// columns are filled only when `source` names a loaded activation.
pub fn run_bottleneck_table(
    datasets: &[(String, Dataset)],
    source: Option<&str>,
    ctx: &ExperimentContext,
) -> Result<(Vec<BottleneckRow>, RunReport)> {
    let dbn = ctx.wide_dbn();
    let mut report = RunReport::new("bottleneck");
    let mut table = Table::new(
        "bottleneck",
        &["dataset", "n", "ibi_cv", "real_peak", "real_dbn", "gt_dbn", "gap", "gt_below_0.5"],
    );
    let mut out = Vec::new();
    for (name, ds) in datasets {
        let tracks = per_track(ds, &mut report, |track, ann| {
            let gt_act = synthesize_gt_activation(ann, &ctx.synth)?;
            let gt = evaluate(&decode(&gt_act, &dbn)?, &ann.beats, &ctx.eval)?;
            let real = match source.and_then(|s| track.activations.get(s)) {
                Some(act) => Some((
                    evaluate(&pick_peaks(act, &ctx.peaks), &ann.beats, &ctx.eval)?,
                    evaluate(&decode(act, &dbn)?, &ann.beats, &ctx.eval)?,
                )),
                None => None,
            };
            Ok(Ok(BottleneckTrack {
                cv: tempo_stats(ann).ok().map(|s| s.ibi_cv),
                gt,
                real,
            }))
        })?;
        let config = format!("dataset={name};{}", dbn_label(&dbn));
        for (track, r) in &tracks {
            report.rows.push(eval_row(track, "gt+dbn", config.clone(), r.gt, ctx));
            if let Some((peak, real)) = r.real {
                report.rows.push(eval_row(track, "real+peak", config.clone(), peak, ctx));
                report.rows.push(eval_row(track, "real+dbn", config.clone(), real, ctx));
            }
        }
        let cvs: Vec<f64> = tracks.iter().filter_map(|(_, r)| r.cv).collect();
        let reals: Vec<&(EvalResult, EvalResult)> = tracks.iter().filter_map(|(_, r)| r.real.as_ref()).collect();
        let gt_dbn_f = mean(tracks.iter().map(|(_, r)| r.gt.f_measure)).unwrap_or(f64::NAN);
        let real_peak_f = mean(reals.iter().map(|r| r.0.f_measure));
        let real_dbn_f = mean(reals.iter().map(|r| r.1.f_measure));
        let row = BottleneckRow {
            dataset: name.clone(),
            n: tracks.len(),
            median_ibi_cv: median(&cvs).unwrap_or(f64::NAN),
            real_peak_f,
            real_dbn_f,
            gt_dbn_f,
            gap: real_dbn_f.map(|r| gt_dbn_f - r),
            gt_below_half: tracks.iter().filter(|(_, r)| r.gt.f_measure < 0.5).count(),
        };
        table.push(vec![
            row.dataset.clone(),
            row.n.to_string(),
            fmt3(row.median_ibi_cv),
            fmt_opt3(row.real_peak_f),
            fmt_opt3(row.real_dbn_f),
            fmt3(row.gt_dbn_f),
            row.gap.map(|g| format!("{g:+.3}")).unwrap_or_else(|| "-".into()),
            row.gt_below_half.to_string(),
        ]);
        out.push(row);
    }
    report.tables.push(table);
    report.finish(&[GroupBy::System]);
    Ok((out, report))
}

// ---------------------------------------------------------------------------
// min-BPM widening

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WideningSummary {
    pub n_slow: usize,
    pub default_f: f64,
    pub wide_f: f64,
    pub default_median_octave_gap: f64,
    pub wide_median_octave_gap: f64,
    pub n_rest: usize,
    pub rest_default_f: f64,
    pub rest_wide_f: f64,
}

/// Decodes tracks with the default and the widened BPM floor, split by
/// whether the annotated tempo lies below the default floor.
pub fn run_min_bpm_widening(
    ds: &Dataset,
    source: &ActivationSource,
    ctx: &ExperimentContext,
) -> Result<(WideningSummary, RunReport)> {
    let narrow = ctx.dbn;
    let wide = ctx.wide_dbn();
    let mut report = RunReport::new("min-bpm");
    let tracks = per_track(ds, &mut report, |track, ann| {
        let stats = tempo_stats(ann)?;
        let act = match source.curve(track, &ctx.synth) {
            Ok(a) => a,
            Err(reason) => return Ok(Err(reason)),
        };
        let a = evaluate(&decode(&act, &narrow)?, &ann.beats, &ctx.eval)?;
        let b = evaluate(&decode(&act, &wide)?, &ann.beats, &ctx.eval)?;
        Ok(Ok((stats, a, b)))
    })?;
    let narrow_name = format!("dbn@{}", narrow.min_bpm);
    let wide_name = format!("dbn@{}", wide.min_bpm);
    for (track, (_, a, b)) in &tracks {
        report.rows.push(eval_row(track, &narrow_name, dbn_label(&narrow), *a, ctx));
        report.rows.push(eval_row(track, &wide_name, dbn_label(&wide), *b, ctx));
    }
    type Widened<'a> = (&'a TrackRecord, (TempoStats, EvalResult, EvalResult));
    let (slow, rest): (Vec<&Widened>, Vec<&Widened>) =
        tracks.iter().partition(|(_, (s, _, _))| s.gt_bpm < narrow.min_bpm);
    let gap = |v: &[&Widened], wide: bool| {
        let g: Vec<f64> = v
            .iter()
            .map(|(_, (_, a, b))| if wide { b.amlt - b.f_measure } else { a.amlt - a.f_measure })
            .collect();
        median(&g).unwrap_or(f64::NAN)
    };
    let summary = WideningSummary {
        n_slow: slow.len(),
        default_f: mean(slow.iter().map(|(_, (_, a, _))| a.f_measure)).unwrap_or(f64::NAN),
        wide_f: mean(slow.iter().map(|(_, (_, _, b))| b.f_measure)).unwrap_or(f64::NAN),
        default_median_octave_gap: gap(&slow, false),
        wide_median_octave_gap: gap(&slow, true),
        n_rest: rest.len(),
        rest_default_f: mean(rest.iter().map(|(_, (_, a, _))| a.f_measure)).unwrap_or(f64::NAN),
        rest_wide_f: mean(rest.iter().map(|(_, (_, _, b))| b.f_measure)).unwrap_or(f64::NAN),
    };
    let mut t = Table::new(
        "min_bpm",
        &["subset", "n", "F_default", "F_wide", "delta_F", "median_amlt_minus_f_default", "median_amlt_minus_f_wide"],
    );
    t.push(vec![
        format!("gt_bpm<{}", narrow.min_bpm),
        summary.n_slow.to_string(),
        fmt3(summary.default_f),
        fmt3(summary.wide_f),
        format!("{:+.3}", summary.wide_f - summary.default_f),
        fmt3(summary.default_median_octave_gap),
        fmt3(summary.wide_median_octave_gap),
    ]);
    t.push(vec![
        "rest".into(),
        summary.n_rest.to_string(),
        fmt3(summary.rest_default_f),
        fmt3(summary.rest_wide_f),
        format!("{:+.3}", summary.rest_wide_f - summary.rest_default_f),
        fmt3(gap(&rest, false)),
        fmt3(gap(&rest, true)),
    ]);
    report.tables.push(t);
    report.finish(&[GroupBy::System, GroupBy::BpmBand]);
    Ok((summary, report))
}

// ---------------------------------------------------------------------------
// λ sweep

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweep {
    pub results: Vec<(f64, EvalResult)>,
    pub best_lambda: f64,
    pub best: EvalResult,
}

/// Index of the highest F, the earliest one on ties.
fn argmax_f(results: &[(f64, EvalResult)]) -> usize {
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.1.f_measure > results[best].1.f_measure {
            best = i;
        }
    }
    best
}

/// Decodes once per λ; the optimum is the highest F, smaller λ on ties.
pub fn sweep_lambda(
    act: &ActivationCurve,
    reference: &BeatAnnotation,
    lambdas: &[f64],
    base: &DbnConfig,
    eval: &EvalConfig,
) -> Result<LambdaSweep> {
    if lambdas.is_empty() {
        return Err(Error::Config("lambda sweep needs at least one value".into()));
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let results = sorted
        .iter()
        .map(|&l| Ok((l, evaluate(&decode(act, &base.with_lambda(l))?, &reference.beats, eval)?)))
        .collect::<Result<Vec<_>>>()?;
    let i = argmax_f(&results);
    Ok(LambdaSweep {
        best_lambda: results[i].0,
        best: results[i].1,
        results,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweepSummary {
    pub per_lambda: Vec<(f64, EvalMeans)>,
    pub optimal: EvalMeans,
    pub best_fixed_lambda: f64,
    pub best_fixed: EvalMeans,
    pub optimal_counts: BTreeMap<String, usize>,
    pub n: usize,
}

pub fn run_lambda_sweep(
    ds: &Dataset,
    source: &ActivationSource,
    ctx: &ExperimentContext,
) -> Result<(LambdaSweepSummary, RunReport)> {
    ctx.sweep.validate()?;
    let base = ctx.wide_dbn();
    let mut report = RunReport::new("lambda-sweep");
    let sweeps = per_track(ds, &mut report, |track, ann| {
        let act = match source.curve(track, &ctx.synth) {
            Ok(a) => a,
            Err(reason) => return Ok(Err(reason)),
        };
        let sweep = sweep_lambda(&act, ann, &ctx.sweep.lambdas, &base, &ctx.eval)?;
        let peak = evaluate(&pick_peaks(&act, &ctx.peaks), &ann.beats, &ctx.eval)?;
        Ok(Ok((sweep, peak)))
    })?;

    let lambdas = {
        let mut l = ctx.sweep.lambdas.clone();
        l.sort_by(f64::total_cmp);
        l
    };
    for (track, (sweep, _)) in &sweeps {
        for (l, r) in &sweep.results {
            report.rows.push(eval_row(track, "dbn", format!("lambda={l}"), *r, ctx));
        }
        report.rows.push(eval_row(
            track,
            "dbn_opt_lambda",
            format!("lambda={}", sweep.best_lambda),
            sweep.best,
            ctx,
        ));
    }

    let per_lambda: Vec<(f64, EvalMeans)> = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, EvalMeans::of(sweeps.iter().map(|(_, (s, _))| &s.results[i].1)).1))
        .collect();
    let as_results: Vec<(f64, EvalResult)> = per_lambda
        .iter()
        .map(|(l, m)| {
            (
                *l,
                EvalResult {
                    f_measure: m.f_measure,
                    ..Default::default()
                },
            )
        })
        .collect();
    let best_i = if as_results.is_empty() { 0 } else { argmax_f(&as_results) };
    let mut optimal_counts: BTreeMap<String, usize> = BTreeMap::new();
    for (_, (s, _)) in &sweeps {
        *optimal_counts.entry(format!("{}", s.best_lambda)).or_default() += 1;
    }
    let summary = LambdaSweepSummary {
        optimal: EvalMeans::of(sweeps.iter().map(|(_, (s, _))| &s.best)).1,
        best_fixed_lambda: per_lambda.get(best_i).map(|p| p.0).unwrap_or(f64::NAN),
        best_fixed: per_lambda.get(best_i).map(|p| p.1).unwrap_or_default(),
        per_lambda,
        optimal_counts,
        n: sweeps.len(),
    };

    let mut t = Table::new("lambda_sweep", &["lambda", "F", "CMLt", "AMLt", "tracks_preferring"]);
    for (l, m) in &summary.per_lambda {
        t.push(vec![
            format!("{l}"),
            fmt3(m.f_measure),
            fmt3(m.cmlt),
            fmt3(m.amlt),
            summary.optimal_counts.get(&format!("{l}")).copied().unwrap_or(0).to_string(),
        ]);
    }
    report.tables.push(t);
    let mut s = Table::new("lambda_summary", &["configuration", "lambda", "F", "CMLt", "AMLt"]);
    if let Some((l, m)) = summary.per_lambda.iter().find(|(l, _)| *l == base.transition_lambda) {
        s.push(vec!["default".into(), format!("{l}"), fmt3(m.f_measure), fmt3(m.cmlt), fmt3(m.amlt)]);
    }
    s.push(vec![
        "best_fixed".into(),
        format!("{}", summary.best_fixed_lambda),
        fmt3(summary.best_fixed.f_measure),
        fmt3(summary.best_fixed.cmlt),
        fmt3(summary.best_fixed.amlt),
    ]);
    s.push(vec![
        "per_track_optimal".into(),
        "-".into(),
        fmt3(summary.optimal.f_measure),
        fmt3(summary.optimal.cmlt),
        fmt3(summary.optimal.amlt),
    ]);
    report.tables.push(s);

    // preferred λ by failure category of the raw peak-picked output
    let mut by_cat: BTreeMap<FailureCategory, Vec<f64>> = BTreeMap::new();
    for (_, (sweep, peak)) in &sweeps {
        by_cat
            .entry(classify_failure(peak, &ctx.taxonomy))
            .or_default()
            .push(sweep.best_lambda);
    }
    let mut c = Table::new("optimal_lambda_by_category", &["category", "n", "median_optimal_lambda"]);
    for (cat, ls) in &by_cat {
        c.push(vec![cat.to_string(), ls.len().to_string(), format!("{}", median(ls).unwrap_or(f64::NAN))]);
    }
    report.tables.push(c);
    report.finish(&[GroupBy::System]);
    Ok((summary, report))
}

// ---------------------------------------------------------------------------
// threshold sweep

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweepSummary {
    pub per_threshold: Vec<(f64, EvalMeans)>,
    pub default_threshold: EvalMeans,
    pub optimal: EvalMeans,
    pub n: usize,
}

pub fn run_threshold_sweep(
    ds: &Dataset,
    source: &ActivationSource,
    ctx: &ExperimentContext,
) -> Result<(ThresholdSweepSummary, RunReport)> {
    ctx.sweep.validate()?;
    let mut report = RunReport::new("threshold-sweep");
    let sweeps = per_track(ds, &mut report, |track, ann| {
        let act = match source.curve(track, &ctx.synth) {
            Ok(a) => a,
            Err(reason) => return Ok(Err(reason)),
        };
        let sweep = sweep_threshold(&act, ann, &ctx.sweep.thresholds, &ctx.peaks, &ctx.eval)?;
        let at_default = evaluate(&pick_peaks(&act, &ctx.peaks), &ann.beats, &ctx.eval)?;
        Ok(Ok((sweep, at_default)))
    })?;
    for (track, (sweep, at_default)) in &sweeps {
        for (th, r) in &sweep.results {
            report.rows.push(eval_row(track, "peaks", format!("threshold={th:.2}"), *r, ctx));
        }
        report.rows.push(eval_row(
            track,
            "peaks_default",
            format!("threshold={:.2}", ctx.peaks.threshold),
            *at_default,
            ctx,
        ));
        report.rows.push(eval_row(
            track,
            "peaks_opt_threshold",
            format!("threshold={:.2}", sweep.best_threshold),
            sweep.best,
            ctx,
        ));
    }
    let summary = ThresholdSweepSummary {
        per_threshold: ctx
            .sweep
            .thresholds
            .iter()
            .enumerate()
            .map(|(i, &th)| (th, EvalMeans::of(sweeps.iter().map(|(_, (s, _))| &s.results[i].1)).1))
            .collect(),
        default_threshold: EvalMeans::of(sweeps.iter().map(|(_, (_, d))| d)).1,
        optimal: EvalMeans::of(sweeps.iter().map(|(_, (s, _))| &s.best)).1,
        n: sweeps.len(),
    };
    let mut t = Table::new("threshold_sweep", &["threshold", "F", "CMLt", "AMLt"]);
    for (th, m) in &summary.per_threshold {
        t.push(vec![format!("{th:.2}"), fmt3(m.f_measure), fmt3(m.cmlt), fmt3(m.amlt)]);
    }
    report.tables.push(t);
    let mut s = Table::new("threshold_summary", &["configuration", "F", "CMLt", "AMLt"]);
    for (name, m) in [("default", summary.default_threshold), ("per_track_optimal", summary.optimal)] {
        s.push(vec![name.into(), fmt3(m.f_measure), fmt3(m.cmlt), fmt3(m.amlt)]);
    }
    report.tables.push(s);
    report.finish(&[GroupBy::System]);
    Ok((summary, report))
}

// ---------------------------------------------------------------------------
// tempo-constrained decoding

/// One BPM per track from some tempo estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct TempoSource {
    pub label: String,
    pub bpm: BTreeMap<String, f64>,
}

impl TempoSource {
    /// Annotated tempo of every track with enough beats.
    pub fn ground_truth(ds: &Dataset) -> Self {
        TempoSource {
            label: "gt".into(),
            bpm: ds
                .annotated()
                .filter_map(|(t, a)| tempo_stats(a).ok().map(|s| (t.track_id.clone(), s.gt_bpm)))
                .collect(),
        }
    }

    /// Groups estimates by source label, in order of first appearance.
    pub fn from_estimates(estimates: &[TempoEstimate]) -> Vec<Self> {
        let mut out: Vec<TempoSource> = Vec::new();
        for e in estimates {
            let i = match out.iter().position(|s| s.label == e.source_label) {
                Some(i) => i,
                None => {
                    out.push(TempoSource {
                        label: e.source_label.clone(),
                        bpm: BTreeMap::new(),
                    });
                    out.len() - 1
                }
            };
            out[i].bpm.insert(e.track_id.clone(), e.bpm);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TempoCurvePoint {
    pub label: String,
    pub tempo_accuracy: f64,
    pub n: usize,
    pub skipped: usize,
    pub means: EvalMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TempoCurve {
    pub points: Vec<TempoCurvePoint>,
    pub baseline_dbn: EvalMeans,
    pub baseline_peak: EvalMeans,
}

/// Decodes every track inside a ±window around each source's tempo, in the
/// given source order, alongside unconstrained baselines. With
/// `optimal_lambda`, each source is also swept over the λ grid per track.
pub fn run_tempo_curve(
    ds: &Dataset,
    source: &ActivationSource,
    tempo_sources: &[TempoSource],
    optimal_lambda: bool,
    ctx: &ExperimentContext,
) -> Result<(TempoCurve, RunReport)> {
    let mut report = RunReport::new("tempo-curve");
    let baselines = per_track(ds, &mut report, |track, ann| {
        let act = match source.curve(track, &ctx.synth) {
            Ok(a) => a,
            Err(reason) => return Ok(Err(reason)),
        };
        let dbn = evaluate(&decode(&act, &ctx.dbn)?, &ann.beats, &ctx.eval)?;
        let peak = evaluate(&pick_peaks(&act, &ctx.peaks), &ann.beats, &ctx.eval)?;
        Ok(Ok((dbn, peak)))
    })?;
    for (track, (dbn, peak)) in &baselines {
        report.rows.push(eval_row(track, "dbn", dbn_label(&ctx.dbn), *dbn, ctx));
        report.rows.push(eval_row(track, "peaks", format!("threshold={}", ctx.peaks.threshold), *peak, ctx));
    }
    let baseline_dbn = EvalMeans::of(baselines.iter().map(|(_, (d, _))| d)).1;
    let baseline_peak = EvalMeans::of(baselines.iter().map(|(_, (_, p))| p)).1;
    let gt_tempo = TempoSource::ground_truth(ds);

    let mut points = Vec::new();
    for ts in tempo_sources {
        let variants: Vec<bool> = if optimal_lambda { vec![false, true] } else { vec![false] };
        for opt in variants {
            let label = if opt { format!("{}+opt_lambda", ts.label) } else { ts.label.clone() };
            let mut sub = RunReport::default();
            let results = per_track(ds, &mut sub, |track, ann| {
                let Some(&center) = ts.bpm.get(&track.track_id) else {
                    return Ok(Err(format!("no `{}` tempo estimate", ts.label)));
                };
                let act = match source.curve(track, &ctx.synth) {
                    Ok(a) => a,
                    Err(reason) => return Ok(Err(reason)),
                };
                let constraint = TempoConstraint {
                    center_bpm: center,
                    window_fraction: ctx.tempo_window,
                };
                let r = if opt {
                    let (lo, hi) = constraint.effective_range()?;
                    let sweep = sweep_lambda(
                        &act,
                        ann,
                        &ctx.sweep.lambdas,
                        &ctx.dbn.with_bpm_range(lo, hi),
                        &ctx.eval,
                    )?;
                    (sweep.best, Some(sweep.best_lambda))
                } else {
                    let beats = decode_constrained(&act, &ctx.dbn, &constraint)?;
                    (evaluate(&beats, &ann.beats, &ctx.eval)?, None)
                };
                Ok(Ok((center, r)))
            })?;
            for (track, (center, (r, l))) in &results {
                let mut config = format!("center_bpm={center:.3};window={}", ctx.tempo_window);
                if let Some(l) = l {
                    config.push_str(&format!(";lambda={l}"));
                }
                report.rows.push(eval_row(track, &format!("constrained:{label}"), config, *r, ctx));
            }
            let correct = ts
                .bpm
                .iter()
                .filter_map(|(id, &b)| gt_tempo.bpm.get(id).map(|&g| label_tempo(b, g, ctx.tempo_tolerance)))
                .collect::<Vec<_>>();
            let accuracy = if correct.is_empty() {
                0.0
            } else {
                correct.iter().filter(|&&l| l == TempoLabel::Correct).count() as f64 / correct.len() as f64
            };
            report.skipped.extend(
                sub.skipped
                    .iter()
                    .map(|(id, why)| (id.clone(), format!("[{label}] {why}"))),
            );
            points.push(TempoCurvePoint {
                label,
                tempo_accuracy: accuracy,
                n: results.len(),
                skipped: sub.skipped.len(),
                means: EvalMeans::of(results.iter().map(|(_, (_, (r, _)))| r)).1,
            });
        }
    }

    let curve = TempoCurve {
        points,
        baseline_dbn,
        baseline_peak,
    };
    let t = tempo_curve_table(&curve);
    report.figures.push(("fig3_tempo_curve.csv".into(), t.clone()));
    report.tables.push(t);
    report.finish(&[GroupBy::System, GroupBy::Category]);
    Ok((curve, report))
}

fn tempo_curve_table(curve: &TempoCurve) -> Table {
    let mut t = Table::new(
        "tempo_curve",
        &[
            "source",
            "tempo_accuracy",
            "n",
            "skipped",
            "F",
            "CMLt",
            "AMLt",
            "baseline_dbn_F",
            "baseline_dbn_CMLt",
            "baseline_peak_F",
            "baseline_peak_CMLt",
        ],
    );
    for p in &curve.points {
        t.push(vec![
            p.label.clone(),
            fmt3(p.tempo_accuracy),
            p.n.to_string(),
            p.skipped.to_string(),
            fmt3(p.means.f_measure),
            fmt3(p.means.cmlt),
            fmt3(p.means.amlt),
            fmt3(curve.baseline_dbn.f_measure),
            fmt3(curve.baseline_dbn.cmlt),
            fmt3(curve.baseline_peak.f_measure),
            fmt3(curve.baseline_peak.cmlt),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// peak picking vs DBN

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeltaSummary {
    pub n: usize,
    pub mean_peak_f: f64,
    pub mean_dbn_f: f64,
    pub mean_delta_f: f64,
    pub mean_delta_amlt: f64,
    pub worsened: usize,
    pub improved: usize,
    pub unchanged: usize,
}

impl DeltaSummary {
    pub fn hurt_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.worsened as f64 / self.n as f64
        }
    }

    fn of<'a>(pairs: impl IntoIterator<Item = &'a (EvalResult, EvalResult)>, margin: f64) -> Self {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let deltas: Vec<f64> = pairs.iter().map(|(p, d)| d.f_measure - p.f_measure).collect();
        DeltaSummary {
            n: pairs.len(),
            mean_peak_f: mean(pairs.iter().map(|(p, _)| p.f_measure)).unwrap_or(0.0),
            mean_dbn_f: mean(pairs.iter().map(|(_, d)| d.f_measure)).unwrap_or(0.0),
            mean_delta_f: mean(deltas.iter().copied()).unwrap_or(0.0),
            mean_delta_amlt: mean(pairs.iter().map(|(p, d)| d.amlt - p.amlt)).unwrap_or(0.0),
            worsened: deltas.iter().filter(|&&d| d < -margin).count(),
            improved: deltas.iter().filter(|&&d| d > margin).count(),
            unchanged: deltas.iter().filter(|&&d| d.abs() <= margin).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakVsDbn {
    pub overall: DeltaSummary,
    /// `(axis, on-axis, off-axis)`.
    pub by_axis: Vec<(Axis, DeltaSummary, DeltaSummary)>,
}

pub fn compare_peak_vs_dbn(
    ds: &Dataset,
    source: &ActivationSource,
    ctx: &ExperimentContext,
) -> Result<(PeakVsDbn, RunReport)> {
    let mut report = RunReport::new("peak-vs-dbn");
    let pairs = per_track(ds, &mut report, |track, ann| {
        let act = match source.curve(track, &ctx.synth) {
            Ok(a) => a,
            Err(reason) => return Ok(Err(reason)),
        };
        let peak = evaluate(&pick_peaks(&act, &ctx.peaks), &ann.beats, &ctx.eval)?;
        let dbn = evaluate(&decode(&act, &ctx.dbn)?, &ann.beats, &ctx.eval)?;
        Ok(Ok((peak, dbn)))
    })?;
    for (track, (peak, dbn)) in &pairs {
        report.rows.push(eval_row(track, "peaks", format!("threshold={}", ctx.peaks.threshold), *peak, ctx));
        report.rows.push(eval_row(track, "dbn", dbn_label(&ctx.dbn), *dbn, ctx));
    }
    let overall = DeltaSummary::of(pairs.iter().map(|(_, p)| p), ctx.hurt_margin);
    let by_axis = Axis::ALL
        .iter()
        .map(|&axis| {
            let (on, off): (Vec<_>, Vec<_>) = pairs.iter().partition(|(t, _)| t.metadata.axes.contains(&axis));
            (
                axis,
                DeltaSummary::of(on.iter().map(|(_, p)| p), ctx.hurt_margin),
                DeltaSummary::of(off.iter().map(|(_, p)| p), ctx.hurt_margin),
            )
        })
        .collect();
    let result = PeakVsDbn { overall, by_axis };

    let mut t = Table::new(
        "peak_vs_dbn",
        &["n", "F_peak", "F_dbn", "delta_F", "delta_AMLt", "worsened", "improved", "unchanged", "pct_hurt"],
    );
    let o = &result.overall;
    t.push(vec![
        o.n.to_string(),
        fmt3(o.mean_peak_f),
        fmt3(o.mean_dbn_f),
        format!("{:+.3}", o.mean_delta_f),
        format!("{:+.3}", o.mean_delta_amlt),
        o.worsened.to_string(),
        o.improved.to_string(),
        o.unchanged.to_string(),
        format!("{:.0}%", 100.0 * o.hurt_fraction()),
    ]);
    report.tables.push(t);
    let mut a = Table::new(
        "peak_vs_dbn_by_axis",
        &["axis", "n_on", "delta_F_on", "pct_hurt_on", "n_off", "delta_F_off", "pct_hurt_off"],
    );
    for (axis, on, off) in &result.by_axis {
        a.push(vec![
            axis.to_string(),
            on.n.to_string(),
            format!("{:+.3}", on.mean_delta_f),
            format!("{:.0}%", 100.0 * on.hurt_fraction()),
            off.n.to_string(),
            format!("{:+.3}", off.mean_delta_f),
            format!("{:.0}%", 100.0 * off.hurt_fraction()),
        ]);
    }
    report.tables.push(a);
    report.finish(&[GroupBy::System, GroupBy::Axis]);
    Ok((result, report))
}

// ---------------------------------------------------------------------------
// difficulty-axis table

#[derive(Debug, Clone, PartialEq)]
pub struct AxisRow {
    pub axis: Axis,
    pub top_tags: Vec<(String, usize)>,
    pub other_tags: usize,
    pub n: usize,
    pub act_on: Option<f64>,
    pub act_off: Option<f64>,
    /// Rank correlation between axis membership and Act@GT.
    pub rho: Option<(f64, f64)>,
    pub delta_f: f64,
    pub pct_hurt: f64,
    pub delta_cmlt_on: Option<f64>,
    pub delta_cmlt_off: Option<f64>,
}

struct AxisTrack {
    act: f64,
    peak: EvalResult,
    dbn: EvalResult,
    gt_tempo: Option<EvalResult>,
}

/// Per-axis activation quality, DBN effect and GT-tempo CMLt gain. The
/// CMLt gain is measured against raw peak picking.
pub fn run_axis_table(
    ds: &Dataset,
    source: &ActivationSource,
    ctx: &ExperimentContext,
) -> Result<(Vec<AxisRow>, RunReport)> {
    let mut report = RunReport::new("axes");
    let tracks = per_track(ds, &mut report, |track, ann| {
        let act = match source.curve(track, &ctx.synth) {
            Ok(a) => a,
            Err(reason) => return Ok(Err(reason)),
        };
        let diag = diagnose(&act, ann)?;
        let peak = evaluate(&pick_peaks(&act, &ctx.peaks), &ann.beats, &ctx.eval)?;
        let dbn = evaluate(&decode(&act, &ctx.dbn)?, &ann.beats, &ctx.eval)?;
        let gt_tempo = match tempo_stats(ann) {
            Ok(s) => {
                let c = TempoConstraint {
                    center_bpm: s.gt_bpm,
                    window_fraction: ctx.tempo_window,
                };
                match decode_constrained(&act, &ctx.dbn, &c) {
                    Ok(beats) => Some(evaluate(&beats, &ann.beats, &ctx.eval)?),
                    Err(Error::Constraint(_)) => None,
                    Err(e) => return Err(e),
                }
            }
            Err(_) => None,
        };
        Ok(Ok((diag, AxisTrack {
            act: diag.act_at_gt,
            peak,
            dbn,
            gt_tempo,
        })))
    })?;
    for (track, (diag, r)) in &tracks {
        let mut row = eval_row(track, "peaks", format!("threshold={}", ctx.peaks.threshold), r.peak, ctx);
        row.diagnostics = Some(*diag);
        report.rows.push(row);
        report.rows.push(eval_row(track, "dbn", dbn_label(&ctx.dbn), r.dbn, ctx));
        if let Some(g) = r.gt_tempo {
            report.rows.push(eval_row(track, "constrained:gt", format!("window={}", ctx.tempo_window), g, ctx));
        }
    }

    let mut rows = Vec::new();
    for axis in Axis::ALL {
        let (on, off): (Vec<_>, Vec<_>) = tracks.iter().partition(|(t, _)| t.metadata.axes.contains(&axis));
        let mut tag_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (t, _) in &on {
            for tag in &t.metadata.canonical_tags {
                if ds.axis_map.axis_of(tag) == Some(axis) {
                    *tag_counts.entry(tag).or_default() += 1;
                }
            }
        }
        let mut tags: Vec<(String, usize)> = tag_counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        tags.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let other_tags = tags.len().saturating_sub(2);
        tags.truncate(2);
        let membership: Vec<f64> = tracks
            .iter()
            .map(|(t, _)| f64::from(u8::from(t.metadata.axes.contains(&axis))))
            .collect();
        let acts: Vec<f64> = tracks.iter().map(|(_, (_, r))| r.act).collect();
        let rho = spearman(&membership, &acts).ok().map(|c| (c.rho, c.p_value));
        let pairs_on: Vec<(EvalResult, EvalResult)> = on.iter().map(|(_, (_, r))| (r.peak, r.dbn)).collect();
        let d = DeltaSummary::of(&pairs_on, ctx.hurt_margin);
        let cmlt_gain = |v: &[&(&TrackRecord, (ActivationDiagnostics, AxisTrack))]| {
            mean(v.iter().filter_map(|(_, (_, r))| r.gt_tempo.map(|g| g.cmlt - r.peak.cmlt)))
        };
        rows.push(AxisRow {
            axis,
            top_tags: tags,
            other_tags,
            n: on.len(),
            act_on: mean(on.iter().map(|(_, (_, r))| r.act)),
            act_off: mean(off.iter().map(|(_, (_, r))| r.act)),
            rho,
            delta_f: d.mean_delta_f,
            pct_hurt: d.hurt_fraction(),
            delta_cmlt_on: cmlt_gain(&on),
            delta_cmlt_off: cmlt_gain(&off),
        });
    }

    let mut t = Table::new(
        "axes",
        &[
            "axis",
            "top_tags",
            "n",
            "act_on",
            "act_off",
            "rho",
            "p",
            "delta_F",
            "pct_hurt",
            "delta_CMLt_on",
            "delta_CMLt_off",
        ],
    );
    for r in &rows {
        let mut tags = r
            .top_tags
            .iter()
            .map(|(t, n)| format!("{t} ({n})"))
            .collect::<Vec<_>>()
            .join(", ");
        if r.other_tags > 0 {
            tags.push_str(&format!(", +{} others", r.other_tags));
        }
        t.push(vec![
            r.axis.to_string(),
            tags,
            r.n.to_string(),
            fmt_opt3(r.act_on),
            fmt_opt3(r.act_off),
            r.rho.map(|c| format!("{:+.3}", c.0)).unwrap_or_else(|| "-".into()),
            r.rho.map(|c| format!("{:.2e}", c.1)).unwrap_or_else(|| "-".into()),
            format!("{:+.3}", r.delta_f),
            format!("{:.0}%", 100.0 * r.pct_hurt),
            r.delta_cmlt_on.map(|v| format!("{v:+.3}")).unwrap_or_else(|| "-".into()),
            r.delta_cmlt_off.map(|v| format!("{v:+.3}")).unwrap_or_else(|| "-".into()),
        ]);
    }
    report.tables.push(t);
    report.finish(&[GroupBy::System, GroupBy::Axis, GroupBy::AxisCount]);
    Ok((rows, report))
}

// ---------------------------------------------------------------------------
// taxonomy

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoder {
    Peaks,
    Dbn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomySummary {
    /// Per system: category → count.
    pub counts: BTreeMap<String, BTreeMap<FailureCategory, usize>>,
    pub intersection: Option<BTreeMap<FailureCategory, usize>>,
    /// Per system: Spearman (ρ, p) between Act@GT and F.
    pub correlation: BTreeMap<String, Option<(f64, f64)>>,
    pub mean_act_by_category: BTreeMap<String, BTreeMap<FailureCategory, f64>>,
}

/// Classifies every track for each source. With `intersect` and two or more
/// sources, also reports the joint category (good only if good everywhere).
pub fn run_taxonomy(
    ds: &Dataset,
    sources: &[ActivationSource],
    decoder: Decoder,
    intersect: bool,
    ctx: &ExperimentContext,
) -> Result<(TaxonomySummary, RunReport)> {
    let mut report = RunReport::new("taxonomy");
    type Classified<'a> = Vec<(&'a TrackRecord, (EvalResult, ActivationDiagnostics))>;
    let mut per_source: Vec<(String, Classified)> = Vec::new();
    for source in sources {
        let mut sub = RunReport::default();
        let results = per_track(ds, &mut sub, |track, ann| {
            let act = match source.curve(track, &ctx.synth) {
                Ok(a) => a,
                Err(reason) => return Ok(Err(reason)),
            };
            let beats: BeatSequence = match decoder {
                Decoder::Peaks => pick_peaks(&act, &ctx.peaks),
                Decoder::Dbn => decode(&act, &ctx.dbn)?,
            };
            Ok(Ok((evaluate(&beats, &ann.beats, &ctx.eval)?, diagnose(&act, ann)?)))
        })?;
        report.skipped.extend(
            sub.skipped
                .into_iter()
                .map(|(id, why)| (id, format!("[{}] {why}", source.label()))),
        );
        per_source.push((source.label().to_string(), results));
    }

    let system_name = |label: &str| match decoder {
        Decoder::Peaks => format!("{label}+peaks"),
        Decoder::Dbn => format!("{label}+dbn"),
    };
    let mut summary = TaxonomySummary {
        counts: BTreeMap::new(),
        intersection: None,
        correlation: BTreeMap::new(),
        mean_act_by_category: BTreeMap::new(),
    };
    let mut t = Table::new(
        "taxonomy",
        &[
            "system",
            "category",
            "n",
            "pct",
            "F",
            "act_at_gt",
            "max_activation",
            "peak_sharpness",
            "periodicity",
            "entropy",
            "fp_activation",
        ],
    );
    let mut corr = Table::new("act_at_gt_vs_f", &["system", "n", "spearman_rho", "p_value"]);
    for (label, results) in &per_source {
        let system = system_name(label);
        let mut by_cat: BTreeMap<FailureCategory, Vec<(EvalResult, ActivationDiagnostics)>> = BTreeMap::new();
        for (track, (eval, diag)) in results {
            let mut row = eval_row(track, &system, String::new(), *eval, ctx);
            row.diagnostics = Some(*diag);
            by_cat.entry(row.category.expect("set by eval_row")).or_default().push((*eval, *diag));
            report.rows.push(row);
        }
        let total = results.len().max(1) as f64;
        let mut counts = BTreeMap::new();
        let mut acts = BTreeMap::new();
        for cat in FailureCategory::ALL {
            let members = by_cat.get(&cat).map(Vec::as_slice).unwrap_or(&[]);
            counts.insert(cat, members.len());
            let m = |f: fn(&ActivationDiagnostics) -> f64| fmt_opt3(mean(members.iter().map(|(_, d)| f(d))));
            if let Some(a) = mean(members.iter().map(|(_, d)| d.act_at_gt)) {
                acts.insert(cat, a);
            }
            t.push(vec![
                system.clone(),
                cat.to_string(),
                members.len().to_string(),
                format!("{:.0}%", 100.0 * members.len() as f64 / total),
                fmt_opt3(mean(members.iter().map(|(e, _)| e.f_measure))),
                m(|d| d.act_at_gt),
                m(|d| d.max_activation),
                m(|d| d.peak_sharpness),
                m(|d| d.periodicity_strength),
                m(|d| d.entropy),
                m(|d| d.false_positive_activation),
            ]);
        }
        let xs: Vec<f64> = results.iter().map(|(_, (_, d))| d.act_at_gt).collect();
        let ys: Vec<f64> = results.iter().map(|(_, (e, _))| e.f_measure).collect();
        let c = spearman(&xs, &ys).ok().map(|c| (c.rho, c.p_value));
        corr.push(vec![
            system.clone(),
            results.len().to_string(),
            c.map(|c| format!("{:+.3}", c.0)).unwrap_or_else(|| "-".into()),
            c.map(|c| format!("{:.2e}", c.1)).unwrap_or_else(|| "-".into()),
        ]);
        summary.counts.insert(system.clone(), counts);
        summary.correlation.insert(system.clone(), c);
        summary.mean_act_by_category.insert(system, acts);
    }
    report.tables.push(t);
    report.tables.push(corr);

    // scatter categories: joint when requested, else the first source
    let mut scatter_category: BTreeMap<&str, FailureCategory> = BTreeMap::new();
    if intersect && per_source.len() >= 2 {
        let mut joint: BTreeMap<&str, Vec<EvalResult>> = BTreeMap::new();
        for (_, results) in &per_source {
            for (track, (eval, _)) in results {
                joint.entry(track.track_id.as_str()).or_default().push(*eval);
            }
        }
        let mut counts: BTreeMap<FailureCategory, usize> = FailureCategory::ALL.iter().map(|&c| (c, 0)).collect();
        let mut it = Table::new("taxonomy_intersection", &["category", "n"]);
        for (id, evals) in &joint {
            if evals.len() != per_source.len() {
                continue;
            }
            if let Some(c) = classify_intersection(evals, &ctx.taxonomy) {
                *counts.entry(c).or_default() += 1;
                scatter_category.insert(id, c);
            }
        }
        for (c, n) in &counts {
            it.push(vec![c.to_string(), n.to_string()]);
        }
        report.tables.push(it);
        summary.intersection = Some(counts);
    }

    let mut scatter = Table::new("scatter", &["track_id", "act_at_gt", "f_measure", "category"]);
    if let Some((_, results)) = per_source.first() {
        for (track, (eval, diag)) in results {
            let cat = scatter_category
                .get(track.track_id.as_str())
                .copied()
                .unwrap_or_else(|| classify_failure(eval, &ctx.taxonomy));
            scatter.push(vec![
                track.track_id.clone(),
                format!("{:.6}", diag.act_at_gt),
                format!("{:.6}", eval.f_measure),
                cat.to_string(),
            ]);
        }
    }
    report.figures.push(("fig2_scatter.csv".into(), scatter));
    report.finish(&[
        GroupBy::System,
        GroupBy::Category,
        GroupBy::Confidence,
        GroupBy::TagCount,
        GroupBy::AxisCount,
        GroupBy::BpmBand,
    ]);
    Ok((summary, report))
}

// ---------------------------------------------------------------------------
// tempo accuracy of external estimates

pub fn run_tempo_accuracy(ds: &Dataset, estimates: &[TempoEstimate], ctx: &ExperimentContext) -> Result<RunReport> {
    let mut report = RunReport::new("tempo-accuracy");
    let refs: Vec<BeatAnnotation> = ds
        .annotated()
        .filter(|(_, a)| a.beats.len() >= 3)
        .map(|(_, a)| a.clone())
        .collect();
    let mut t = Table::new("tempo_accuracy", &["source", "band", "n", "correct", "double", "half", "other"]);
    for source in TempoSource::from_estimates(estimates) {
        let ests: Vec<TempoEstimate> = estimates
            .iter()
            .filter(|e| e.source_label == source.label)
            .cloned()
            .collect();
        let acc = tempo_accuracy(&ests, &refs, ctx.tempo_tolerance)?;
        report.skipped.extend(
            acc.unmatched
                .iter()
                .map(|id| (id.clone(), format!("[{}] no annotation", source.label))),
        );
        let rates = |r: &crate::diagnostics::LabelRates| {
            [TempoLabel::Correct, TempoLabel::Double, TempoLabel::Half, TempoLabel::Other]
                .map(|l| format!("{:.1}%", 100.0 * r.rate(l)))
        };
        let mut push = |band: &str, r: &crate::diagnostics::LabelRates| {
            let [c, d, h, o] = rates(r);
            t.push(vec![source.label.clone(), band.into(), r.n.to_string(), c, d, h, o]);
        };
        push("all", &acc.overall);
        for (band, _, _) in BPM_BANDS {
            if let Some(r) = acc.by_band.get(band) {
                push(band, r);
            }
        }
    }
    report.tables.push(t);
    report.finish(&[]);
    Ok(report)
}

// ---------------------------------------------------------------------------
// figure data

/// Figure CSVs derivable from a dataset and a finished report: the tempo
/// histogram, the Act@GT/F scatter (rows with diagnostics) and the tempo
/// curve (when the report has one). Missing inputs give header-only CSVs.
pub fn emit_figure_data(ds: &Dataset, report: &RunReport) -> Vec<(String, Table)> {
    let bpms: Vec<f64> = ds
        .annotated()
        .filter_map(|(_, a)| tempo_stats(a).ok().map(|s| s.gt_bpm))
        .collect();
    let mut scatter = Table::new("scatter", &["track_id", "act_at_gt", "f_measure", "category"]);
    let mut seen = BTreeSet::new();
    for row in &report.rows {
        if let (Some(d), Some(e)) = (row.diagnostics, row.eval) {
            if seen.insert(row.track_id.clone()) {
                scatter.push(vec![
                    row.track_id.clone(),
                    format!("{:.6}", d.act_at_gt),
                    format!("{:.6}", e.f_measure),
                    row.category.map(|c| c.to_string()).unwrap_or_default(),
                ]);
            }
        }
    }
    let curve = report.table("tempo_curve").cloned().unwrap_or_else(|| {
        tempo_curve_table(&TempoCurve {
            points: Vec::new(),
            baseline_dbn: EvalMeans::default(),
            baseline_peak: EvalMeans::default(),
        })
    });
    vec![
        ("fig1_bpm_histogram.csv".into(), bpm_histogram(&bpms)),
        ("fig2_scatter.csv".into(), scatter),
        ("fig3_tempo_curve.csv".into(), curve),
    ]
}
