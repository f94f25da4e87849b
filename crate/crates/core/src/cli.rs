use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use beatdiag::config::RunConfig;
use beatdiag::dbn::{decode, decode_constrained, TempoConstraint};
use beatdiag::diagnostics::diagnose;
use beatdiag::experiments::{
    compare_peak_vs_dbn, dataset_stats, emit_figure_data, run_axis_table, run_bottleneck_table,
    run_lambda_sweep, run_min_bpm_widening, run_taxonomy, run_tempo_accuracy, run_tempo_curve,
    run_threshold_sweep, synthesize_gt_activation, ActivationSource, Decoder, TempoSource,
};
use beatdiag::ingest::{
    load_activation, load_beats, load_dataset, load_tempo_estimates, track_id_from_path, write_activation_binary,
    write_activation_text, write_beats, BeatAnnotation, Dataset, MANIFEST_NAME,
};
use beatdiag::metrics::evaluate;
use beatdiag::peaks::pick_peaks;
use beatdiag::report::{read_rows_csv, GroupBy, RunReport};
use beatdiag::signal::ActivationCurve;

pub const EXPERIMENTS: [&str; 10] = [
    "dataset-stats",
    "bottleneck",
    "min-bpm",
    "lambda-sweep",
    "threshold-sweep",
    "tempo-curve",
    "peak-vs-dbn",
    "axes",
    "taxonomy",
    "tempo-accuracy",
];

/// Failure split by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Data(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<beatdiag::Error>() {
            Some(beatdiag::Error::Config(_)) => Failure::Usage(e),
            _ => Failure::Data(e),
        }
    }
}

impl From<beatdiag::Error> for Failure {
    fn from(e: beatdiag::Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

fn usage(msg: impl fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "beatdiag", version, about = "Beat-tracking decoder, metrics and diagnostics")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Config overrides shared by every subcommand. Each flag mirrors a config key.
#[derive(Args, Debug, Default)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override any config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Worker threads for track-level parallelism (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<String>,
    #[arg(short = 'o', long, global = true)]
    pub out_dir: Option<String>,
    /// Dataset root.
    #[arg(long, global = true)]
    pub root: Option<String>,
    /// Activation sources as `label=dir[,label=dir]`.
    #[arg(long, global = true)]
    pub activations: Option<String>,
    #[arg(long, global = true)]
    pub tempo_estimates: Option<String>,
    #[arg(long, global = true)]
    pub axis_map: Option<String>,
    #[arg(long, global = true)]
    pub min_bpm: Option<String>,
    #[arg(long, global = true)]
    pub max_bpm: Option<String>,
    #[arg(long, visible_alias = "lambda", global = true)]
    pub transition_lambda: Option<String>,
    #[arg(long, global = true)]
    pub observation_lambda: Option<String>,
    #[arg(long, global = true)]
    pub correct_beats: Option<String>,
    /// `round` or `ceil`.
    #[arg(long, global = true)]
    pub beat_region: Option<String>,
    #[arg(long, global = true)]
    pub threshold: Option<String>,
    #[arg(long, global = true)]
    pub min_separation: Option<String>,
    #[arg(long, global = true)]
    pub f_window: Option<String>,
    #[arg(long, visible_alias = "trim", global = true)]
    pub trim_seconds: Option<String>,
    #[arg(long, global = true)]
    pub lambdas: Option<String>,
    #[arg(long, global = true)]
    pub thresholds: Option<String>,
    #[arg(long, global = true)]
    pub sigma_frames: Option<String>,
    #[arg(long, global = true)]
    pub synth_fps: Option<String>,
    #[arg(long, global = true)]
    pub wide_min_bpm: Option<String>,
    #[arg(long, global = true)]
    pub tempo_window: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        [
            ("jobs", &self.jobs),
            ("out_dir", &self.out_dir),
            ("root", &self.root),
            ("activations", &self.activations),
            ("tempo_estimates", &self.tempo_estimates),
            ("axis_map", &self.axis_map),
            ("min_bpm", &self.min_bpm),
            ("max_bpm", &self.max_bpm),
            ("transition_lambda", &self.transition_lambda),
            ("observation_lambda", &self.observation_lambda),
            ("correct_beats", &self.correct_beats),
            ("beat_region", &self.beat_region),
            ("threshold", &self.threshold),
            ("min_separation", &self.min_separation),
            ("f_window", &self.f_window),
            ("trim_seconds", &self.trim_seconds),
            ("lambdas", &self.lambdas),
            ("thresholds", &self.thresholds),
            ("sigma_frames", &self.sigma_frames),
            ("synth_fps", &self.synth_fps),
            ("wide_min_bpm", &self.wide_min_bpm),
            ("tempo_window", &self.tempo_window),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect()
    }

    /// Defaults, then the config file, then flags, then `--set`.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(|e| match e {
                beatdiag::Error::Io { .. } => Failure::Data(e.into()),
                e => usage(e),
            })?,
            None => RunConfig::default(),
        };
        for (k, v) in self.overrides() {
            cfg.set(k, v).map_err(usage)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim()).map_err(usage)?;
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decode activation files into `.beats` files.
    #[command(group(ArgGroup::new("decoder").required(true).args(["dbn", "peaks", "dbn_constrained"])))]
    Decode {
        /// Activation files or directories.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        dbn: bool,
        #[arg(long)]
        peaks: bool,
        /// DBN restricted to a window around a tempo estimate.
        #[arg(long)]
        dbn_constrained: bool,
        /// Tempo centre applied to every track.
        #[arg(long)]
        tempo: Option<f64>,
        /// Only use estimates from this source label in the tempo CSV.
        #[arg(long)]
        tempo_source: Option<String>,
    },
    /// Evaluate estimated beats against references.
    Eval {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
        /// Also write the results to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Activation diagnostics against references.
    Diagnose {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        activation: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Synthesize ground-truth activations from annotations.
    SynthGt {
        #[arg(required = true)]
        references: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = ActFormat::Text)]
        format: ActFormat,
    },
    /// Run a named experiment over the dataset at `root`.
    Experiment {
        name: String,
        /// Activation source label, or `gt` for synthesized activations.
        #[arg(long)]
        source: Option<String>,
        /// Comma-separated sources for the taxonomy.
        #[arg(long)]
        sources: Option<String>,
        #[arg(long, value_enum, default_value_t = DecoderArg::Peaks)]
        decoder: DecoderArg,
        /// Joint taxonomy over all sources.
        #[arg(long)]
        intersect: bool,
        /// Add a per-track optimal-λ series to the tempo curve.
        #[arg(long)]
        optimal_lambda: bool,
        /// Extra datasets for the bottleneck table, as `name=root`.
        #[arg(long = "dataset", value_name = "NAME=ROOT")]
        datasets: Vec<String>,
    },
    /// Recompute aggregates from a rows.csv file.
    Report {
        rows: PathBuf,
        #[arg(long = "group-by", value_name = "KEY")]
        group_by: Vec<String>,
        /// Also emit figure CSVs, using the dataset at `root` for the histogram.
        #[arg(long)]
        figures: bool,
        /// Write the report under `out_dir/report/`.
        #[arg(long)]
        write: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActFormat {
    Text,
    Binary,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderArg {
    Peaks,
    Dbn,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = cli.common.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::Data(e.into()))?;
    pool.install(|| dispatch(cli.command, &cfg))
}

fn dispatch(command: Command, cfg: &RunConfig) -> CliResult<()> {
    match command {
        Command::Decode {
            inputs,
            dbn,
            peaks,
            dbn_constrained: _,
            tempo,
            tempo_source,
        } => {
            let mode = if dbn {
                DecodeMode::Dbn
            } else if peaks {
                DecodeMode::Peaks
            } else {
                DecodeMode::Constrained
            };
            cmd_decode(cfg, &inputs, mode, tempo, tempo_source.as_deref())
        }
        Command::Eval { reference, estimate, csv } => cmd_eval(cfg, &reference, &estimate, csv.as_deref()),
        Command::Diagnose {
            reference,
            activation,
            csv,
        } => cmd_diagnose(&reference, &activation, csv.as_deref()),
        Command::SynthGt { references, format } => cmd_synth(cfg, &references, format),
        Command::Experiment {
            name,
            source,
            sources,
            decoder,
            intersect,
            optimal_lambda,
            datasets,
        } => cmd_experiment(
            cfg,
            &ExperimentArgs {
                name,
                source,
                sources,
                decoder,
                intersect,
                optimal_lambda,
                datasets,
            },
        ),
        Command::Report {
            rows,
            group_by,
            figures,
            write,
        } => cmd_report(cfg, &rows, &group_by, figures, write),
    }
}

/// Regular files under each input, directories expanded one level, sorted.
fn expand_inputs(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("reading {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != MANIFEST_NAME))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            bail!("{}: no such file or directory", input.display());
        }
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DecodeMode {
    Dbn,
    Peaks,
    Constrained,
}

fn cmd_decode(
    cfg: &RunConfig,
    inputs: &[PathBuf],
    mode: DecodeMode,
    tempo: Option<f64>,
    tempo_source: Option<&str>,
) -> CliResult<()> {
    let tempi: BTreeMap<String, f64> = if mode == DecodeMode::Constrained {
        match (tempo, &cfg.tempo_estimates) {
            (Some(_), _) => BTreeMap::new(),
            (None, Some(path)) => load_tempo_estimates(path)?
                .into_iter()
                .filter(|e| tempo_source.is_none_or(|s| e.source_label == s))
                .map(|e| (e.track_id, e.bpm))
                .collect(),
            (None, None) => return Err(usage("--dbn-constrained needs --tempo or --tempo-estimates")),
        }
    } else {
        BTreeMap::new()
    };
    let files = expand_inputs(inputs)?;
    if files.is_empty() {
        return Err(Failure::Data(anyhow!("no activation files found")));
    }
    let out = &cfg.out_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for path in &files {
        let act = load_activation(path)?;
        let id = track_id_from_path(path);
        let beats = match mode {
            DecodeMode::Dbn => decode(&act, cfg.dbn())?,
            DecodeMode::Peaks => pick_peaks(&act, cfg.peaks()),
            DecodeMode::Constrained => {
                let center = tempo
                    .or_else(|| tempi.get(&id).copied())
                    .ok_or_else(|| Failure::Data(anyhow!("{}: no tempo estimate for `{id}`", path.display())))?;
                let c = TempoConstraint {
                    center_bpm: center,
                    window_fraction: cfg.ctx.tempo_window,
                };
                decode_constrained(&act, cfg.dbn(), &c).with_context(|| path.display().to_string())?
            }
        };
        write_beats(&out.join(format!("{id}.beats")), &beats)?;
    }
    cfg.write_manifest(out)?;
    eprintln!("decoded {} files into {}", files.len(), out.display());
    Ok(())
}

fn load_annotations(path: &Path) -> anyhow::Result<BTreeMap<String, BeatAnnotation>> {
    expand_inputs(&[path.to_path_buf()])?
        .into_iter()
        .map(|p| {
            let a = load_beats(&p)?;
            Ok((a.track_id.clone(), a))
        })
        .collect()
}

fn eval_header() -> &'static str {
    "track_id,f_measure,cmlc,cmlt,amlc,amlt,n_ref,n_est"
}

fn cmd_eval(cfg: &RunConfig, reference: &Path, estimate: &Path, csv: Option<&Path>) -> CliResult<()> {
    let refs = load_annotations(reference)?;
    let ests = load_annotations(estimate)?;
    let unmatched: Vec<String> = refs
        .keys()
        .filter(|k| !ests.contains_key(*k))
        .map(|k| format!("{k} (no estimate)"))
        .chain(ests.keys().filter(|k| !refs.contains_key(*k)).map(|k| format!("{k} (no reference)")))
        .collect();
    let mut out = format!("{}\n", eval_header());
    let mut results = Vec::new();
    for (id, r) in &refs {
        let Some(e) = ests.get(id) else { continue };
        let res = evaluate(&e.beats, &r.beats, cfg.eval()).with_context(|| id.clone())?;
        out.push_str(&format!(
            "{id},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            res.f_measure, res.cmlc, res.cmlt, res.amlc, res.amlt, res.n_ref, res.n_est
        ));
        results.push(res);
    }
    if !results.is_empty() {
        let (_, m) = beatdiag::report::EvalMeans::of(&results);
        out.push_str(&format!(
            "mean,{:.6},{:.6},{:.6},{:.6},{:.6},,\n",
            m.f_measure, m.cmlc, m.cmlt, m.amlc, m.amlt
        ));
    }
    print!("{out}");
    if let Some(p) = csv {
        fs::write(p, &out).with_context(|| format!("writing {}", p.display()))?;
    }
    if !unmatched.is_empty() {
        return Err(Failure::Data(anyhow!("mismatched track ids:\n  {}", unmatched.join("\n  "))));
    }
    Ok(())
}

fn cmd_diagnose(reference: &Path, activation: &Path, csv: Option<&Path>) -> CliResult<()> {
    let refs = load_annotations(reference)?;
    let mut out = String::from(
        "track_id,act_at_gt,max_activation,peak_sharpness,periodicity_strength,entropy,false_positive_activation\n",
    );
    let mut missing = Vec::new();
    for path in expand_inputs(&[activation.to_path_buf()])? {
        let id = track_id_from_path(&path);
        let Some(r) = refs.get(&id) else {
            missing.push(id);
            continue;
        };
        let act = load_activation(&path)?;
        let d = diagnose(&act, r).with_context(|| id.clone())?;
        out.push_str(&format!(
            "{id},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            d.act_at_gt, d.max_activation, d.peak_sharpness, d.periodicity_strength, d.entropy, d.false_positive_activation
        ));
    }
    print!("{out}");
    if let Some(p) = csv {
        fs::write(p, &out).with_context(|| format!("writing {}", p.display()))?;
    }
    if !missing.is_empty() {
        return Err(Failure::Data(anyhow!("no reference for: {}", missing.join(", "))));
    }
    Ok(())
}

fn cmd_synth(cfg: &RunConfig, references: &[PathBuf], format: ActFormat) -> CliResult<()> {
    let out = &cfg.out_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let files = expand_inputs(references)?;
    for path in &files {
        let a = load_beats(path)?;
        let act: ActivationCurve = synthesize_gt_activation(&a, cfg.synth())?;
        match format {
            ActFormat::Text => write_activation_text(&out.join(format!("{}.act", a.track_id)), &act)?,
            ActFormat::Binary => write_activation_binary(&out.join(format!("{}.bin", a.track_id)), &act)?,
        }
    }
    cfg.write_manifest(out)?;
    eprintln!("synthesized {} activations into {}", files.len(), out.display());
    Ok(())
}

struct ExperimentArgs {
    name: String,
    source: Option<String>,
    sources: Option<String>,
    decoder: DecoderArg,
    intersect: bool,
    optimal_lambda: bool,
    datasets: Vec<String>,
}

fn load_root(cfg: &RunConfig, root: &Path) -> CliResult<Dataset> {
    let ds = load_dataset(root, &cfg.layout()?)?;
    if ds.annotated().next().is_none() {
        return Err(Failure::Data(anyhow!(
            "{}: no annotations found under `{}`",
            root.display(),
            cfg.beats_dir.display()
        )));
    }
    Ok(ds)
}

fn cmd_experiment(cfg: &RunConfig, args: &ExperimentArgs) -> CliResult<()> {
    if !EXPERIMENTS.contains(&args.name.as_str()) {
        return Err(usage(format!(
            "unknown experiment `{}`; valid: {}",
            args.name,
            EXPERIMENTS.join(", ")
        )));
    }
    let root = cfg
        .root
        .clone()
        .ok_or_else(|| usage("experiments need a dataset root (--root or `root` in the config)"))?;
    let ds = load_root(cfg, &root)?;
    let ctx = &cfg.ctx;
    let source = ActivationSource::parse(
        args.source
            .as_deref()
            .or_else(|| cfg.activations.first().map(|(l, _)| l.as_str()))
            .unwrap_or("gt"),
    );
    if let ActivationSource::External(label) = &source {
        if !ds.activation_sources().contains(label) {
            return Err(usage(format!("no activations loaded for source `{label}`")));
        }
    }
    let report: RunReport = match args.name.as_str() {
        "dataset-stats" => dataset_stats(&ds)?.1,
        "bottleneck" => {
            let name = root
                .file_name()
                .map(|n| n.to_string_lossy().to_string())
                .unwrap_or_else(|| "dataset".into());
            let mut sets = vec![(name, ds)];
            for spec in &args.datasets {
                let (n, r) = spec
                    .split_once('=')
                    .ok_or_else(|| usage(format!("--dataset expects NAME=ROOT, got `{spec}`")))?;
                sets.push((n.to_string(), load_root(cfg, Path::new(r))?));
            }
            let real = match &source {
                ActivationSource::External(l) => Some(l.as_str()),
                ActivationSource::GroundTruth => None,
            };
            run_bottleneck_table(&sets, real, ctx)?.1
        }
        "min-bpm" => run_min_bpm_widening(&ds, &source, ctx)?.1,
        "lambda-sweep" => run_lambda_sweep(&ds, &source, ctx)?.1,
        "threshold-sweep" => run_threshold_sweep(&ds, &source, ctx)?.1,
        "tempo-curve" => {
            let mut tempo_sources = match &cfg.tempo_estimates {
                Some(p) => TempoSource::from_estimates(&load_tempo_estimates(p)?),
                None => Vec::new(),
            };
            tempo_sources.retain(|s| s.label != "gt");
            tempo_sources.push(TempoSource::ground_truth(&ds));
            run_tempo_curve(&ds, &source, &tempo_sources, args.optimal_lambda, ctx)?.1
        }
        "peak-vs-dbn" => compare_peak_vs_dbn(&ds, &source, ctx)?.1,
        "axes" => run_axis_table(&ds, &source, ctx)?.1,
        "taxonomy" => {
            let sources: Vec<ActivationSource> = match &args.sources {
                Some(list) => list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(ActivationSource::parse)
                    .collect(),
                None => vec![source.clone()],
            };
            let decoder = match args.decoder {
                DecoderArg::Peaks => Decoder::Peaks,
                DecoderArg::Dbn => Decoder::Dbn,
            };
            run_taxonomy(&ds, &sources, decoder, args.intersect, ctx)?.1
        }
        "tempo-accuracy" => {
            let path = cfg
                .tempo_estimates
                .as_ref()
                .ok_or_else(|| usage("tempo-accuracy needs --tempo-estimates"))?;
            run_tempo_accuracy(&ds, &load_tempo_estimates(path)?, ctx)?
        }
        _ => unreachable!("checked against EXPERIMENTS"),
    };
    let dir = report.write(&cfg.out_dir)?;
    cfg.write_manifest(&dir)?;
    print!("{}", report.text());
    if !report.skipped.is_empty() {
        eprintln!("{} track(s) skipped; see {}", report.skipped.len(), dir.join("report.txt").display());
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn cmd_report(cfg: &RunConfig, rows: &Path, group_by: &[String], figures: bool, write: bool) -> CliResult<()> {
    let groups = if group_by.is_empty() {
        vec![GroupBy::System]
    } else {
        group_by
            .iter()
            .map(|g| {
                GroupBy::parse(g).ok_or_else(|| {
                    usage(format!(
                        "unknown group `{g}`; valid: {}",
                        GroupBy::ALL.map(GroupBy::name).join(", ")
                    ))
                })
            })
            .collect::<CliResult<Vec<_>>>()?
    };
    let mut report = RunReport::new("report");
    report.rows = read_rows_csv(rows)?;
    report.finish(&groups);
    if figures {
        let ds = match &cfg.root {
            Some(root) => load_root(cfg, root)?,
            None => Dataset::default(),
        };
        report.figures = emit_figure_data(&ds, &report);
    }
    print!("{}", report.text());
    if write {
        let dir = report.write(&cfg.out_dir)?;
        cfg.write_manifest(&dir)?;
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}
