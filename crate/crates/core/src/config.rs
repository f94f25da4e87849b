//! Run configuration: a flat `key = value` file, overridable per key.
//!
//! Keys are snake_case field names; list values are comma separated.
//! Activation sources are `label=dir` pairs, e.g.
//! `activations = bt=acts/beat_this, tf=acts/transformer`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dbn::DbnConfig;
use crate::diagnostics::TaxonomyConfig;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentContext, SweepSpec, SynthConfig};
use crate::ingest::{AxisMap, DatasetLayout};
use crate::metrics::EvalConfig;
use crate::peaks::PeakConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub root: Option<PathBuf>,
    pub beats_dir: PathBuf,
    pub beats_ext: String,
    pub tags_dir: Option<PathBuf>,
    pub tags_ext: String,
    pub axis_map: Option<PathBuf>,
    pub id_pattern: Option<String>,
    pub metadata_csv: Option<PathBuf>,
    pub activations: Vec<(String, PathBuf)>,
    pub tempo_estimates: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// 0 means one worker per core.
    pub jobs: usize,
    pub ctx: ExperimentContext,
}

impl Default for RunConfig {
    fn default() -> Self {
        let layout = DatasetLayout::default();
        RunConfig {
            root: None,
            beats_dir: layout.beats_dir,
            beats_ext: layout.beats_ext,
            tags_dir: layout.tags_dir,
            tags_ext: layout.tags_ext,
            axis_map: None,
            id_pattern: None,
            metadata_csv: None,
            activations: Vec::new(),
            tempo_estimates: None,
            out_dir: PathBuf::from("runs"),
            jobs: 0,
            ctx: ExperimentContext::default(),
        }
    }
}

/// Every recognised key, in manifest order.
pub const KEYS: &[&str] = &[
    "root",
    "beats_dir",
    "beats_ext",
    "tags_dir",
    "tags_ext",
    "axis_map",
    "id_pattern",
    "metadata_csv",
    "activations",
    "tempo_estimates",
    "out_dir",
    "jobs",
    "min_bpm",
    "max_bpm",
    "transition_lambda",
    "observation_lambda",
    "correct_beats",
    "beat_region",
    "threshold",
    "min_separation",
    "f_window",
    "continuity_phase_tol",
    "continuity_tempo_tol",
    "trim_seconds",
    "lambdas",
    "thresholds",
    "sigma_frames",
    "synth_fps",
    "good_f",
    "octave_gap",
    "continuity_gap",
    "total_f",
    "total_amlt",
    "wide_min_bpm",
    "tempo_window",
    "tempo_tolerance",
    "hurt_margin",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty() && value != "-").then(|| PathBuf::from(value))
}

fn join_list(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into())
}

impl RunConfig {
    /// Reads a config file, starting from defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one key. Kebab-case keys are accepted too.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let k = key.as_str();
        let ctx = &mut self.ctx;
        match k {
            "root" => self.root = optional_path(value),
            "beats_dir" => self.beats_dir = PathBuf::from(value),
            "beats_ext" => self.beats_ext = value.trim_start_matches('.').to_string(),
            "tags_dir" => self.tags_dir = optional_path(value),
            "tags_ext" => self.tags_ext = value.trim_start_matches('.').to_string(),
            "axis_map" => self.axis_map = optional_path(value),
            "id_pattern" => self.id_pattern = (!value.is_empty() && value != "-").then(|| value.to_string()),
            "metadata_csv" => self.metadata_csv = optional_path(value),
            "activations" => {
                self.activations = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|pair| {
                        pair.split_once('=')
                            .map(|(l, d)| (l.trim().to_string(), PathBuf::from(d.trim())))
                            .ok_or_else(|| Error::Config(format!("`activations`: expected label=dir, got `{pair}`")))
                    })
                    .collect::<Result<_>>()?
            }
            "tempo_estimates" => self.tempo_estimates = optional_path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "jobs" => self.jobs = num(k, value)?,
            "min_bpm" => ctx.dbn.min_bpm = num(k, value)?,
            "max_bpm" => ctx.dbn.max_bpm = num(k, value)?,
            "transition_lambda" | "lambda" => ctx.dbn.transition_lambda = num(k, value)?,
            "observation_lambda" => ctx.dbn.observation_lambda = num(k, value)?,
            "correct_beats" => ctx.dbn.correct_beats = boolean(k, value)?,
            "beat_region" => ctx.dbn.beat_region = value.parse()?,
            "threshold" => ctx.peaks.threshold = num(k, value)?,
            "min_separation" => ctx.peaks.min_separation = num(k, value)?,
            "f_window" => ctx.eval.f_window = num(k, value)?,
            "continuity_phase_tol" => ctx.eval.continuity_phase_tol = num(k, value)?,
            "continuity_tempo_tol" => ctx.eval.continuity_tempo_tol = num(k, value)?,
            "trim_seconds" | "trim" => ctx.eval.trim_seconds = num(k, value)?,
            "lambdas" => ctx.sweep.lambdas = list(k, value)?,
            "thresholds" => ctx.sweep.thresholds = list(k, value)?,
            "sigma_frames" => ctx.synth.sigma_frames = num(k, value)?,
            "synth_fps" => ctx.synth.fps = num(k, value)?,
            "good_f" => ctx.taxonomy.good_f = num(k, value)?,
            "octave_gap" => ctx.taxonomy.octave_gap = num(k, value)?,
            "continuity_gap" => ctx.taxonomy.continuity_gap = num(k, value)?,
            "total_f" => ctx.taxonomy.total_f = num(k, value)?,
            "total_amlt" => ctx.taxonomy.total_amlt = num(k, value)?,
            "wide_min_bpm" => ctx.wide_min_bpm = num(k, value)?,
            "tempo_window" => ctx.tempo_window = num(k, value)?,
            "tempo_tolerance" => ctx.tempo_tolerance = num(k, value)?,
            "hurt_margin" => ctx.hurt_margin = num(k, value)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let c = &self.ctx;
        Some(match key {
            "root" => show_path(&self.root),
            "beats_dir" => self.beats_dir.display().to_string(),
            "beats_ext" => self.beats_ext.clone(),
            "tags_dir" => show_path(&self.tags_dir),
            "tags_ext" => self.tags_ext.clone(),
            "axis_map" => show_path(&self.axis_map),
            "id_pattern" => self.id_pattern.clone().unwrap_or_else(|| "-".into()),
            "metadata_csv" => show_path(&self.metadata_csv),
            "activations" => self
                .activations
                .iter()
                .map(|(l, d)| format!("{l}={}", d.display()))
                .collect::<Vec<_>>()
                .join(","),
            "tempo_estimates" => show_path(&self.tempo_estimates),
            "out_dir" => self.out_dir.display().to_string(),
            "jobs" => self.jobs.to_string(),
            "min_bpm" => c.dbn.min_bpm.to_string(),
            "max_bpm" => c.dbn.max_bpm.to_string(),
            "transition_lambda" => c.dbn.transition_lambda.to_string(),
            "observation_lambda" => c.dbn.observation_lambda.to_string(),
            "correct_beats" => c.dbn.correct_beats.to_string(),
            "beat_region" => c.dbn.beat_region.name().to_string(),
            "threshold" => c.peaks.threshold.to_string(),
            "min_separation" => c.peaks.min_separation.to_string(),
            "f_window" => c.eval.f_window.to_string(),
            "continuity_phase_tol" => c.eval.continuity_phase_tol.to_string(),
            "continuity_tempo_tol" => c.eval.continuity_tempo_tol.to_string(),
            "trim_seconds" => c.eval.trim_seconds.to_string(),
            "lambdas" => join_list(&c.sweep.lambdas),
            "thresholds" => join_list(&c.sweep.thresholds),
            "sigma_frames" => c.synth.sigma_frames.to_string(),
            "synth_fps" => c.synth.fps.to_string(),
            "good_f" => c.taxonomy.good_f.to_string(),
            "octave_gap" => c.taxonomy.octave_gap.to_string(),
            "continuity_gap" => c.taxonomy.continuity_gap.to_string(),
            "total_f" => c.taxonomy.total_f.to_string(),
            "total_amlt" => c.taxonomy.total_amlt.to_string(),
            "wide_min_bpm" => c.wide_min_bpm.to_string(),
            "tempo_window" => c.tempo_window.to_string(),
            "tempo_tolerance" => c.tempo_tolerance.to_string(),
            "hurt_margin" => c.hurt_margin.to_string(),
            _ => return None,
        })
    }

    /// Checks every embedded numeric constraint.
    pub fn validate(&self) -> Result<()> {
        let c = &self.ctx;
        c.dbn.validate()?;
        c.peaks.validate()?;
        c.eval.validate()?;
        c.sweep.validate()?;
        if !(c.synth.sigma_frames > 0.0 && c.synth.fps > 0.0) {
            return Err(Error::Config("sigma_frames and synth_fps must be positive".into()));
        }
        for (name, v) in [("wide_min_bpm", c.wide_min_bpm), ("tempo_window", c.tempo_window), ("tempo_tolerance", c.tempo_tolerance)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("`{name}` must be positive")));
            }
        }
        if !(c.hurt_margin.is_finite() && c.hurt_margin >= 0.0) {
            return Err(Error::Config("`hurt_margin` must be non-negative".into()));
        }
        Ok(())
    }

    /// The dataset layout, with the axis map loaded when one is configured.
    pub fn layout(&self) -> Result<DatasetLayout> {
        Ok(DatasetLayout {
            beats_dir: self.beats_dir.clone(),
            beats_ext: self.beats_ext.clone(),
            tags_dir: self.tags_dir.clone(),
            tags_ext: self.tags_ext.clone(),
            activation_dirs: self.activations.clone(),
            id_pattern: self.id_pattern.clone(),
            metadata_csv: self.metadata_csv.clone(),
            axis_map: match &self.axis_map {
                Some(p) => AxisMap::load(p)?,
                None => AxisMap::seed(),
            },
        })
    }

    /// The resolved configuration in the same format `load` reads, headed by
    /// the toolkit version.
    pub fn manifest(&self) -> String {
        let mut out = format!("# beatdiag {VERSION}\n");
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn write_manifest(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(crate::ingest::MANIFEST_NAME);
        fs::write(&path, self.manifest()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn dbn(&self) -> &DbnConfig {
        &self.ctx.dbn
    }

    pub fn peaks(&self) -> &PeakConfig {
        &self.ctx.peaks
    }

    pub fn eval(&self) -> &EvalConfig {
        &self.ctx.eval
    }

    pub fn synth(&self) -> &SynthConfig {
        &self.ctx.synth
    }

    pub fn sweep(&self) -> &SweepSpec {
        &self.ctx.sweep
    }

    pub fn taxonomy(&self) -> &TaxonomyConfig {
        &self.ctx.taxonomy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("min-bpm", "30").unwrap();
        cfg.set("lambdas", "1, 5, 100").unwrap();
        cfg.set("activations", "bt=acts/bt,tf=/abs/tf").unwrap();
        cfg.set("correct_beats", "no").unwrap();
        cfg.set("root", "/data/smc").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.manifest()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.ctx.sweep.lambdas, vec![1.0, 5.0, 100.0]);
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.manifest()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn every_key_readable() {
        let cfg = RunConfig::default();
        for k in KEYS {
            assert!(cfg.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.set("nope", "1"), Err(Error::Config(_))));
        assert!(matches!(cfg.set("min_bpm", "fast"), Err(Error::Config(_))));
        assert!(cfg.apply_text("min_bpm 30").is_err());
        assert!(cfg.apply_text("# comment\n\nmax_bpm = 200\n").is_ok());
        assert_eq!(cfg.ctx.dbn.max_bpm, 200.0);
    }

    #[test]
    fn validate_catches_bad_ranges() {
        let mut cfg = RunConfig::default();
        cfg.set("min_bpm", "250").unwrap();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.set("thresholds", "0.5,0.2").unwrap();
        assert!(cfg.validate().is_err());
    }
}
