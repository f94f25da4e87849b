//! The bundled pseudo-model dataset and the numbers each experiment reports on it.

use std::fs;
use std::path::{Path, PathBuf};

use beatdiag::diagnostics::FailureCategory;
use beatdiag::experiments::{
    compare_peak_vs_dbn, run_axis_table, run_bottleneck_table, run_lambda_sweep, run_taxonomy, run_tempo_curve,
    run_threshold_sweep, ActivationSource, Decoder, ExperimentContext, TempoSource,
};
use beatdiag::ingest::load_tempo_estimates;
use beatdiag::report::RunReport;
use beatdiag::{load_dataset, Dataset, DatasetLayout};

pub const SOURCE: &str = "pseudo";

pub fn bundle() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pseudo")
}

pub fn layout() -> DatasetLayout {
    DatasetLayout {
        activation_dirs: vec![(SOURCE.into(), "acts/pseudo".into())],
        ..DatasetLayout::default()
    }
}

pub fn load(root: &Path) -> Dataset {
    load_dataset(root, &layout()).unwrap()
}

/// Every experiment that consumes external activations, reduced to named
/// numbers, plus the reports so row emission can be checked.
pub fn measure(root: &Path) -> (Vec<(String, f64)>, Vec<RunReport>) {
    let ds = load(root);
    let ctx = ExperimentContext::default();
    let src = ActivationSource::parse(SOURCE);
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut put = |k: &str, v: f64| out.push((k.to_string(), v));
    let mut reports = Vec::new();

    let (rows, r) = run_bottleneck_table(&[("pseudo".into(), ds.clone())], Some(SOURCE), &ctx).unwrap();
    put("bottleneck.real_peak_f", rows[0].real_peak_f.unwrap());
    put("bottleneck.real_dbn_f", rows[0].real_dbn_f.unwrap());
    put("bottleneck.gt_dbn_f", rows[0].gt_dbn_f);
    reports.push(r);

    let (s, r) = run_lambda_sweep(&ds, &src, &ctx).unwrap();
    put("lambda.optimal_f", s.optimal.f_measure);
    put("lambda.best_fixed", s.best_fixed_lambda);
    put("lambda.best_fixed_f", s.best_fixed.f_measure);
    reports.push(r);

    let (s, r) = run_threshold_sweep(&ds, &src, &ctx).unwrap();
    put("threshold.default_f", s.default_threshold.f_measure);
    put("threshold.optimal_f", s.optimal.f_measure);
    reports.push(r);

    let estimates = load_tempo_estimates(&root.join("tempo.csv")).unwrap();
    let mut sources = TempoSource::from_estimates(&estimates);
    sources.push(TempoSource::ground_truth(&ds));
    let (c, r) = run_tempo_curve(&ds, &src, &sources, false, &ctx).unwrap();
    put("tempo.baseline_dbn_cmlt", c.baseline_dbn.cmlt);
    for p in &c.points {
        put(&format!("tempo.{}.accuracy", p.label), p.tempo_accuracy);
        put(&format!("tempo.{}.cmlt", p.label), p.means.cmlt);
    }
    reports.push(r);

    let (p, r) = compare_peak_vs_dbn(&ds, &src, &ctx).unwrap();
    put("peak_vs_dbn.mean_peak_f", p.overall.mean_peak_f);
    put("peak_vs_dbn.mean_dbn_f", p.overall.mean_dbn_f);
    put("peak_vs_dbn.mean_delta_f", p.overall.mean_delta_f);
    reports.push(r);

    let (_, r) = run_axis_table(&ds, &src, &ctx).unwrap();
    reports.push(r);

    let (t, r) = run_taxonomy(&ds, std::slice::from_ref(&src), Decoder::Dbn, false, &ctx).unwrap();
    let counts = t.counts.values().next().unwrap();
    for cat in FailureCategory::ALL {
        put(&format!("taxonomy.{cat}"), counts.get(&cat).copied().unwrap_or(0) as f64);
    }
    if let Some((rho, _)) = t.correlation.values().next().copied().flatten() {
        put("taxonomy.rho", rho);
    }
    reports.push(r);
    (out, reports)
}

pub fn read_expected() -> Vec<(String, f64)> {
    let text = fs::read_to_string(bundle().join("expected.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.parse().unwrap())
        })
        .collect()
}

