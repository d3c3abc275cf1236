use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::metrics::{summarize, write_table_csv, DEFAULT_THRESHOLDS};
use super::surface::{scan_loss_surface, toy_dataset, toy_model, toy_snapshot, write_grid_csv};
use super::timeline::{initial_model, run_timeline, Experiment, ExperimentConfig, Strategy, TimelineResult};
use crate::calib::{
    build_noise_model_with_cost, parse_calibrations, synth_timeseries, write_calibrations,
    write_calibrations_csv, CalibrationSnapshot, DriftConfig,
};
use crate::compress::{admm_compress, CompressConfig, CompressedModel, PriorityMode, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::qcore::{pair, GateCostModel, Pair};
use crate::qnn::{evaluate_accuracy, train, Dataset, QnnModel, Splits, TrainConfig};
use crate::repo::{build_repository, history_accuracies, RepoConfig, Repository};

#[derive(Debug, Parser)]
#[command(name = "qucad", version, about = "Noise-adaptive compression of quantum neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic calibration history.
    SynthCalib(SynthArgs),
    /// Train a classifier, noiselessly or under one day's noise.
    Train(TrainArgs),
    /// Compress a model for one calibration day.
    Compress(CompressArgs),
    /// Build the offline model repository from a calibration range.
    BuildRepo(BuildRepoArgs),
    /// Run strategies over online days and write TimelineResult JSON.
    RunTimeline(TimelineArgs),
    /// Scan the loss over two parameters and write CSV grids.
    ScanSurface(ScanArgs),
    /// Summarize timeline results as a table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// `iris` for the bundled data, or a CSV path (features then label).
    #[arg(long, default_value = "iris")]
    dataset: String,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 303)]
    days: usize,
    /// DriftConfig JSON; overrides `--preset`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in drift preset: `ring4` or `ring4-uneven`.
    #[arg(long, default_value = "ring4")]
    preset: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    /// Calibration file whose coupling the circuit is routed onto.
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    qubits: usize,
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Train under this day's noise: `cal.json:DAY`.
    #[arg(long)]
    noise: Option<String>,
    /// Start from this model instead of a fresh ansatz.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompressOpts {
    /// CompressConfig JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cost model JSON override.
    #[arg(long)]
    cost: Option<PathBuf>,
    /// Mask this fraction of parameters.
    #[arg(long, conflicts_with = "threshold")]
    fraction: Option<f64>,
    /// Absolute priority threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    inner_epochs: Option<usize>,
    #[arg(long)]
    finetune_epochs: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// Priority 1/d, ignoring calibration.
    #[arg(long)]
    agnostic: bool,
}

#[derive(Debug, Args)]
struct CompressArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// `cal.json:DAY`
    #[arg(long)]
    calib: String,
    #[command(flatten)]
    opts: CompressOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BuildRepoArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// `cal.json:START:END`
    #[arg(long)]
    offline: String,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    acc_req: f64,
    #[command(flatten)]
    opts: CompressOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TimelineArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    /// Strategy name, repeatable, or `all`.
    #[arg(long, required = true)]
    strategy: Vec<String>,
    /// `cal.json:START:END`
    #[arg(long)]
    offline: Option<String>,
    /// `cal.json:START:END`
    #[arg(long)]
    online: String,
    /// Noiselessly trained model; trained here when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Prebuilt repository; built from `--offline` when omitted.
    #[arg(long)]
    repo: Option<PathBuf>,
    /// ExperimentConfig JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Model to scan; the built-in 2-parameter toy when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Dataset for `--model`; the toy data otherwise.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    no_header: bool,
    /// `cal.json:DAY`; the toy calibration when omitted.
    #[arg(long)]
    calib: Option<String>,
    #[arg(long, default_value_t = 0)]
    i: usize,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// TimelineResult JSON files.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Baseline run; defaults to the baseline strategy among the inputs,
    /// else the last file.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn load_dataset(spec: &str, no_header: bool) -> Result<Dataset> {
    if spec.eq_ignore_ascii_case("iris") {
        Ok(Dataset::iris())
    } else {
        Dataset::load_csv(Path::new(spec), !no_header)
    }
}

/// `path`, `path:DAY` or `path:START:END`.
fn parse_range(spec: &str) -> Result<(PathBuf, Option<usize>, Option<usize>)> {
    let bad = || Error::Usage(format!("bad calibration range `{spec}`"));
    let parts: Vec<&str> = spec.rsplitn(3, ':').collect();
    let num = |s: &str| s.parse::<usize>().ok();
    match parts.as_slice() {
        [end, start, path] if num(end).is_some() && num(start).is_some() => {
            Ok((PathBuf::from(path), num(start), num(end)))
        }
        [day, rest @ ..] if num(day).is_some() => {
            let path: Vec<&str> = rest.iter().rev().copied().collect();
            Ok((PathBuf::from(path.join(":")), num(day), None))
        }
        _ if !spec.is_empty() => Ok((PathBuf::from(spec), None, None)),
        _ => Err(bad()),
    }
}

fn load_range(spec: &str) -> Result<Vec<CalibrationSnapshot>> {
    let (path, start, end) = parse_range(spec)?;
    let days = parse_calibrations(&path)?;
    let (s, e) = match (start, end) {
        (Some(s), Some(e)) => (s, e),
        (Some(s), None) => (s, s + 1),
        _ => (0, days.len()),
    };
    if s >= e || e > days.len() {
        return Err(Error::Usage(format!(
            "range {s}..{e} outside the {} days of {}",
            days.len(),
            path.display()
        )));
    }
    Ok(days[s..e].to_vec())
}

fn load_day(spec: &str) -> Result<CalibrationSnapshot> {
    let days = load_range(spec)?;
    if days.len() != 1 {
        return Err(Error::Usage(format!("`{spec}` must name a single day (cal.json:DAY)")));
    }
    Ok(days.into_iter().next().expect("one day"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn compress_config(opts: &CompressOpts, seed: u64) -> Result<CompressConfig> {
    let mut c: CompressConfig = match &opts.config {
        Some(p) => read_json(p)?,
        None => CompressConfig::default(),
    };
    if let Some(p) = &opts.cost {
        c.cost = GateCostModel::load(p)?;
    }
    if let Some(f) = opts.fraction {
        c.threshold = ThresholdPolicy::Fraction(f);
    }
    if let Some(t) = opts.threshold {
        c.threshold = ThresholdPolicy::Absolute(t);
    }
    c.rounds = opts.rounds.unwrap_or(c.rounds);
    c.inner_epochs = opts.inner_epochs.unwrap_or(c.inner_epochs);
    c.finetune_epochs = opts.finetune_epochs.unwrap_or(c.finetune_epochs);
    c.rho = opts.rho.unwrap_or(c.rho);
    if opts.agnostic {
        c.priority = PriorityMode::NoiseAgnostic;
    }
    c.seed = seed;
    c.validate()?;
    Ok(c)
}

fn ring(n: usize) -> std::collections::BTreeSet<Pair> {
    (0..n).map(|i| pair(i, (i + 1) % n)).filter(|(a, b)| a != b).collect()
}

fn splits(data: &Dataset, seed: u64) -> Splits {
    let d = ExperimentConfig::default();
    Splits::new(data, d.train_fraction, d.val_fraction, seed)
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => read_json(p)?,
        None => match a.preset.as_str() {
            "ring4" => DriftConfig::ring4(a.days, a.common.seed),
            "ring4-uneven" => DriftConfig::ring4_uneven(a.days, a.common.seed),
            other => return Err(Error::Usage(format!("unknown preset `{other}` (ring4, ring4-uneven)"))),
        },
    };
    config.n_days = a.days;
    config.seed = a.common.seed;
    let days = synth_timeseries(&config)?;
    write_calibrations(&a.out, &days)?;
    if let Some(csv) = &a.csv {
        write_calibrations_csv(csv, &days)?;
    }
    println!("wrote {} days to {}", days.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let data = load_dataset(&a.data.dataset, a.data.no_header)?;
    let s = splits(&data, a.common.seed);
    let init = match &a.model {
        Some(p) => QnnModel::load(p)?,
        None => {
            let coupling = match &a.calib {
                Some(p) => parse_calibrations(p)?
                    .first()
                    .map(|d| d.coupling())
                    .ok_or_else(|| Error::Config("calibration file has no days".into()))?,
                None => ring(a.qubits),
            };
            initial_model(&s.train, &coupling, a.qubits, a.blocks, a.common.seed)?
        }
    };
    let noise = match &a.noise {
        Some(spec) => Some(build_noise_model_with_cost(&load_day(spec)?, GateCostModel::default())?),
        None => None,
    };
    let cfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        seed: a.common.seed,
        noise: noise.clone(),
        ..TrainConfig::default()
    };
    let (model, report) = train(&init, &s.train, Some(&s.val), &cfg)?;
    model.save(&a.out)?;
    println!(
        "final train loss {:.4}; test accuracy {:.4}",
        report.train_loss.last().copied().unwrap_or(f64::NAN),
        evaluate_accuracy(&model, &s.test, noise.as_ref())?
    );
    Ok(())
}

fn cmd_compress(a: CompressArgs) -> Result<()> {
    let data = load_dataset(&a.data.dataset, a.data.no_header)?;
    let s = splits(&data, a.common.seed);
    let model = QnnModel::load(&a.model)?;
    let day = load_day(&a.calib)?;
    let cfg = compress_config(&a.opts, a.common.seed)?;
    let out = admm_compress(&model, &s.train, Some(&s.val), &day, &cfg)?;
    let noise = build_noise_model_with_cost(&day, cfg.cost.clone())?;
    let acc = evaluate_accuracy(&out.model, &s.test, Some(&noise))?;
    CompressedModel {
        model: out.model,
        mask: out.mask.clone(),
        table: cfg.table.clone(),
        snapshot_id: day.date.clone(),
    }
    .save(&a.out)?;
    println!(
        "masked {}/{} parameters; noisy test accuracy {acc:.4}",
        out.mask.iter().filter(|&&m| m).count(),
        out.mask.len()
    );
    Ok(())
}

fn cmd_build_repo(a: BuildRepoArgs) -> Result<()> {
    let data = load_dataset(&a.data.dataset, a.data.no_header)?;
    let s = splits(&data, a.common.seed);
    let model = QnnModel::load(&a.model)?;
    let history = load_range(&a.offline)?;
    let config = RepoConfig {
        k: a.k,
        acc_requirement: a.acc_req,
        seed: a.common.seed,
        compress: compress_config(&a.opts, a.common.seed)?,
    };
    let acc = history_accuracies(&model, &history, &s.val, &config.compress)?;
    let repo = build_repository(&model, &history, &acc, &s.train, Some(&s.val), &config)?;
    repo.save(&a.out)?;
    println!(
        "{} entries ({} invalid), th_w = {:.6}",
        repo.entries.len(),
        repo.entries.iter().filter(|e| e.invalid).count(),
        repo.th_w
    );
    Ok(())
}

fn cmd_timeline(a: TimelineArgs) -> Result<()> {
    let data = load_dataset(&a.data.dataset, a.data.no_header)?;
    let mut config: ExperimentConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => ExperimentConfig::default(),
    };
    config.seed = a.common.seed;
    config.repo.seed = a.common.seed;
    let strategies: Vec<Strategy> = if a.strategy.iter().any(|s| s == "all") {
        Strategy::ALL.to_vec()
    } else {
        a.strategy.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };
    let offline = match &a.offline {
        Some(spec) => load_range(spec)?,
        None => Vec::new(),
    };
    let online = load_range(&a.online)?;
    let mut exp = match &a.model {
        Some(p) => {
            let s = Splits::new(&data, config.train_fraction, config.val_fraction, config.seed);
            Experiment::with_model(QnnModel::load(p)?, s, offline, online, config)?
        }
        None => Experiment::new(&data, offline, online, config)?,
    };
    if let Some(p) = &a.repo {
        exp.set_repository(Repository::load(p)?);
    }
    let mut results = Vec::new();
    for st in strategies {
        let r = run_timeline(st, &exp)?;
        println!(
            "{:<28} mean accuracy {:.4}  optimizations {:>3}  online time {:.2}s",
            st.name(),
            r.mean_accuracy(),
            r.online_optimizations,
            r.wall_time_s
        );
        results.push(r);
    }
    write_json(&a.out, &results)
}

fn cmd_scan(a: ScanArgs) -> Result<()> {
    let (model, data) = match &a.model {
        Some(p) => {
            let spec = a.dataset.as_deref().unwrap_or("iris");
            (QnnModel::load(p)?, load_dataset(spec, a.no_header)?)
        }
        None => (toy_model(), toy_dataset()),
    };
    let snapshot = match &a.calib {
        Some(spec) => load_day(spec)?,
        None => toy_snapshot(0.1),
    };
    let noise = build_noise_model_with_cost(&snapshot, GateCostModel::default())?;
    let s = scan_loss_surface(&model, a.i, a.j, a.grid, &data, Some(&noise))?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    write_grid_csv(&a.out_dir.join("noiseless.csv"), &s.noiseless)?;
    write_grid_csv(&a.out_dir.join("noisy.csv"), s.noisy.as_ref().expect("noise given"))?;
    write_grid_csv(&a.out_dir.join("diff.csv"), &s.difference()?)?;
    println!("wrote {0}x{0} grids to {1}", a.grid, a.out_dir.display());
    Ok(())
}

/// Reads a file holding one TimelineResult or a list of them.
fn read_results(path: &Path) -> Result<Vec<TimelineResult>> {
    let v: serde_json::Value = read_json(path)?;
    let parsed = if v.is_array() {
        serde_json::from_value(v)
    } else {
        serde_json::from_value(v).map(|r| vec![r])
    };
    parsed.map_err(|e| Error::parse(path, e))
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut runs = Vec::new();
    for p in &a.runs {
        runs.extend(read_results(p)?);
    }
    let baseline = match &a.baseline {
        Some(p) => read_results(p)?
            .into_iter()
            .find(|r| r.strategy == Strategy::Baseline)
            .or_else(|| read_results(p).ok()?.into_iter().next())
            .ok_or_else(|| Error::Config("baseline file is empty".into()))?,
        None => runs
            .iter()
            .find(|r| r.strategy == Strategy::Baseline)
            .or(runs.last())
            .cloned()
            .ok_or_else(|| Error::Config("no runs given".into()))?,
    };
    let rows = runs
        .iter()
        .map(|r| summarize(r, &DEFAULT_THRESHOLDS, &baseline))
        .collect::<Result<Vec<_>>>()?;
    println!(
        "{:<28} {:>8} {:>9} {:>9} {:>5} {:>5} {:>5} {:>5}",
        "strategy", "mean", "vs_base", "variance", ">0.8", ">0.7", ">0.5", "opt"
    );
    for r in &rows {
        println!(
            "{:<28} {:>8.4} {:>+9.4} {:>9.5} {:>5} {:>5} {:>5} {:>5}",
            r.strategy, r.mean_acc, r.vs_baseline, r.variance, r.days_over[0], r.days_over[1], r.days_over[2], r.optimizations
        );
    }
    if let Some(p) = &a.csv {
        write_table_csv(p, &rows)?;
    }
    Ok(())
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on usage or validation errors, 2 on I/O errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::SynthCalib(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Compress(a) => cmd_compress(a),
        Command::BuildRepo(a) => cmd_build_repo(a),
        Command::RunTimeline(a) => cmd_timeline(a),
        Command::ScanSurface(a) => cmd_scan(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}
