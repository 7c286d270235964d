//! Command-line front end: `simulate`, `prepare`, `train`, `predict`,
//! `uncertainty`, `evaluate`, `plot` and `version`.

mod config;

pub use config::{InferConfig, PathsConfig, RunConfig};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{self, add_awgn, load_dataset, save_dataset, DataError, Dataset, NoiseSpec, NoiseTarget, N_STATES};
use crate::deeponet::{latest_checkpoint, list_checkpoints, Checkpoint, CheckpointError, CHECKPOINT_VERSION};
use crate::engine::{write_trajectory_csv, EngineOutputs};
use crate::infer::{
    evaluate_noisy, predict, seq2seq_report, state_errors, truth, uncertainty_report, IcSource, InferError,
    LabelNoiseReport, Prediction, PredictionEnsemble, StateErrors,
};
use crate::plot::{Band, Chart, Series};
use crate::train::{noisy_label_set, train, MetricsLog, RunDir, TrainError, TrainState};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "engine-deeponet", version, about = "Diesel engine surrogate: simulate, train, predict")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, default_value = "config.json")]
    config: PathBuf,
    /// Override a config leaf, e.g. `--set training.epochs=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the drive cycle and write the trajectory CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Output path [default: <workspace>/trajectory.csv].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, window and split into the dataset directory.
    Prepare {
        #[command(flatten)]
        common: Common,
    },
    /// Train (or resume) the surrogate.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train on labels with this much noise [%] in a separate run directory.
        #[arg(long)]
        label_noise_pct: Option<f64>,
        /// Discard existing checkpoints instead of resuming.
        #[arg(long, default_value_t = false)]
        fresh: bool,
    },
    /// Predict the test span.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Chain initial conditions from the previous train's prediction.
        #[arg(long, default_value_t = false)]
        chained: bool,
        /// Input noise [%] added before predicting.
        #[arg(long, default_value_t = 0.0)]
        noise_pct: f64,
    },
    /// MC-dropout ensemble over the test span.
    Uncertainty {
        #[command(flatten)]
        common: Common,
        /// Number of stochastic passes [default: inference.n_mc].
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Noise sweep, chaining, uncertainty and label-noise reports.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Input-noise levels [%] [default: pipeline.noise.input_levels].
        #[arg(long, value_delimiter = ',')]
        noise: Option<Vec<f64>>,
    },
    /// SVG charts of truth vs prediction and of accumulated error.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Window start [s] relative to the test span.
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// Window length [s].
        #[arg(long, default_value_t = 60.0)]
        length: f64,
        /// Use chained initial conditions.
        #[arg(long, default_value_t = false)]
        chained: bool,
    },
    /// Print tool and file-format versions.
    Version,
}

/// A failure with its exit code and machine-readable tag.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub tag: &'static str,
    pub message: String,
}

impl Failure {
    fn new(code: i32, tag: &'static str, message: impl Into<String>) -> Self {
        Self { code, tag, message: message.into() }
    }
    fn usage(message: impl Into<String>) -> Self {
        Self::new(1, "config", message)
    }
    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(4, "io", format!("{}: {e}", path.display()))
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } => Self::new(4, "io", e.to_string()),
            DataError::Config(_) => Self::usage(e.to_string()),
            DataError::Engine(_) => Self::new(3, "simulation", e.to_string()),
            _ => Self::new(2, "data", e.to_string()),
        }
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Missing(_) => Self::new(2, "missing_checkpoint", e.to_string()),
            CheckpointError::Io { .. } => Self::new(4, "io", e.to_string()),
            _ => Self::new(2, "bad_checkpoint", e.to_string()),
        }
    }
}

impl From<InferError> for Failure {
    fn from(e: InferError) -> Self {
        match e {
            InferError::Data(d) => d.into(),
            InferError::ChainGap { .. } => Self::new(2, "chain_gap", e.to_string()),
            InferError::Config(_) => Self::usage(e.to_string()),
            _ => Self::new(3, "numeric", e.to_string()),
        }
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => Self::usage(e.to_string()),
            TrainError::Checkpoint(c) => c.into(),
            TrainError::Data(d) => d.into(),
            TrainError::Infer(i) => i.into(),
            TrainError::Io { .. } => Self::new(4, "io", e.to_string()),
            TrainError::NonFiniteLoss { .. } | TrainError::Model(_) => Self::new(3, "training", e.to_string()),
        }
    }
}

/// Exclusive marker file for the duration of a writing command.
struct WorkspaceLock(PathBuf);

impl WorkspaceLock {
    fn acquire(ws: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(ws).map_err(|e| Failure::io(ws, e))?;
        let path = ws.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Failure::new(
                4,
                "workspace_locked",
                format!("{} exists; another command is using this workspace", path.display()),
            )),
            Err(e) => Err(Failure::io(&path, e)),
        }
    }
}

impl Drop for WorkspaceLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

struct Ctx {
    cfg: RunConfig,
    hash: String,
    ws: PathBuf,
    _lock: WorkspaceLock,
}

impl Ctx {
    fn open(common: &Common) -> Result<Self, Failure> {
        let cfg = RunConfig::load(&common.config, &common.set).map_err(Failure::usage)?;
        cfg.validate().map_err(Failure::usage)?;
        let ws = cfg.paths.workspace.clone();
        let lock = WorkspaceLock::acquire(&ws)?;
        Ok(Self { hash: cfg.config_hash(), cfg, ws, _lock: lock })
    }

    fn dataset_dir(&self) -> PathBuf {
        self.ws.join("dataset")
    }

    fn run_dir(&self) -> PathBuf {
        self.ws.join("run")
    }

    fn label_noise_dir(&self, level: f64) -> PathBuf {
        self.ws.join(format!("run-label-noise-{level}"))
    }

    fn dataset(&self) -> Result<Dataset, Failure> {
        let dir = self.dataset_dir();
        if !dir.join("meta.json").exists() {
            return Err(Failure::new(
                2,
                "missing_dataset",
                format!("no dataset in {}; run `prepare` first", dir.display()),
            ));
        }
        Ok(load_dataset(&dir)?)
    }

    fn checkpoint(&self, dir: &Path) -> Result<Checkpoint, Failure> {
        let (_, path) = latest_checkpoint(dir).ok_or_else(|| {
            Failure::new(2, "missing_checkpoint", format!("no checkpoint in {}; run `train` first", dir.display()))
        })?;
        Ok(Checkpoint::load(&path)?)
    }

    fn comments(&self) -> Vec<String> {
        vec![format!("config_hash={}", self.hash), format!("tool_version={TOOL_VERSION}")]
    }

    fn write(&self, path: &Path, contents: &str) -> Result<(), Failure> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        }
        fs::write(path, contents).map_err(|e| Failure::io(path, e))
    }

    fn write_json<T: Serialize>(&self, path: &Path, body: &T) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Stamped<'a, T> {
            config_hash: &'a str,
            tool_version: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        let text = serde_json::to_string_pretty(&Stamped { config_hash: &self.hash, tool_version: TOOL_VERSION, body })
            .expect("report serializes");
        self.write(path, &(text + "\n"))
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code. Errors go to stderr followed by an
/// `error_code=<tag>` line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            if code != 0 {
                eprintln!("error_code=usage");
            }
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            eprintln!("error_code={}", f.tag);
            f.code
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Simulate { common, out } => simulate(&Ctx::open(&common)?, out),
        Command::Prepare { common } => prepare(&Ctx::open(&common)?),
        Command::Train { common, label_noise_pct, fresh } => train_cmd(&Ctx::open(&common)?, label_noise_pct, fresh),
        Command::Predict { common, chained, noise_pct } => predict_cmd(&Ctx::open(&common)?, chained, noise_pct),
        Command::Uncertainty { common, samples } => uncertainty_cmd(&Ctx::open(&common)?, samples),
        Command::Evaluate { common, noise } => evaluate_cmd(&Ctx::open(&common)?, noise),
        Command::Plot { common, start, length, chained } => plot_cmd(&Ctx::open(&common)?, start, length, chained),
        Command::Version => {
            println!("engine-deeponet {TOOL_VERSION}");
            println!("checkpoint_format {CHECKPOINT_VERSION}");
            println!("dataset_format {}", data::DATASET_VERSION);
            Ok(())
        }
    }
}

fn simulate(ctx: &Ctx, out: Option<PathBuf>) -> Result<(), Failure> {
    let traj = data::synthesize(&ctx.cfg.engine, &ctx.cfg.cycle)?;
    let path = out.unwrap_or_else(|| ctx.ws.join("trajectory.csv"));
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &traj, &ctx.comments()).map_err(|e| Failure::io(&path, e))?;
    ctx.write(&path, std::str::from_utf8(&buf).expect("csv is utf-8"))?;
    println!("wrote {} samples to {}", traj.len(), path.display());
    Ok(())
}

fn prepare(ctx: &Ctx) -> Result<(), Failure> {
    let traj = data::synthesize(&ctx.cfg.engine, &ctx.cfg.cycle)?;
    let mut ds = data::prepare(&traj, &ctx.cfg.pipeline, &ctx.cfg.cycle.bounds)?;
    ds.meta.config_hash = ctx.hash.clone();
    ds.meta.cycle_seed = ctx.cfg.cycle.seed;
    save_dataset(&ds, &ctx.dataset_dir())?;
    println!(
        "{} trains ({} train / {} test, span {:?}) in {}",
        ds.meta.n_trains,
        ds.meta.n_train,
        ds.meta.n_test,
        ds.meta.test_span,
        ctx.dataset_dir().display()
    );
    if !ds.meta.guarded_channels.is_empty() {
        eprintln!("warning: constant channels guarded: {}", ds.meta.guarded_channels.join(", "));
    }
    Ok(())
}

fn clear_run_dir(dir: &Path) -> Result<(), Failure> {
    for (_, p) in list_checkpoints(dir) {
        fs::remove_file(&p).map_err(|e| Failure::io(&p, e))?;
    }
    for name in ["metrics.csv", "summary.json"] {
        let p = dir.join(name);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| Failure::io(&p, e))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    training_hash: String,
    epochs: usize,
    final_loss: Option<f64>,
    label_noise_pct: f64,
    test_errors: StateErrors,
}

fn train_cmd(ctx: &Ctx, label_noise: Option<f64>, fresh: bool) -> Result<(), Failure> {
    let ds = ctx.dataset()?;
    let tcfg = &ctx.cfg.training;
    let level = label_noise.unwrap_or(0.0);
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Failure::usage("--label-noise-pct must be non-negative"));
    }
    let (dir, train_set, norm) = if label_noise.is_some() {
        let (noisy, norm) = noisy_label_set(&ds.train, &ds.meta.norm, level, ctx.cfg.pipeline.noise.seed)?;
        (ctx.label_noise_dir(level), noisy, norm)
    } else {
        (ctx.run_dir(), ds.train.clone(), ds.meta.norm.clone())
    };
    let hash = format!("{}-{level}", ctx.cfg.training_hash());
    let resumable = match latest_checkpoint(&dir) {
        Some((_, p)) if !fresh => {
            let ck = Checkpoint::load(&p)?;
            if ck.meta.config_hash == hash {
                Some(TrainState::from_checkpoint(ck)?)
            } else {
                eprintln!("existing checkpoints belong to another configuration; starting over");
                None
            }
        }
        _ => None,
    };
    let mut state = match resumable {
        Some(s) => {
            println!("resuming from epoch {}", s.epoch);
            MetricsLog::truncate_file(&dir.join("metrics.csv"), s.epoch, &hash).map_err(|e| Failure::io(&dir, e))?;
            s
        }
        None => {
            clear_run_dir(&dir)?;
            TrainState::fresh(ctx.cfg.model.clone(), norm, tcfg)?
        }
    };
    let mut observer = RunDir {
        dir: dir.clone(),
        config_hash: hash.clone(),
        seed: tcfg.seed,
        keep: tcfg.keep_checkpoints,
        verbose: true,
    };
    let log = train(&mut state, &train_set, &ds.test, tcfg, &mut observer)?;
    let errors = crate::train::test_errors(&state.model, &ds.test)?;
    let summary = TrainSummary {
        training_hash: hash,
        epochs: state.epoch,
        final_loss: log.rows.last().map(|r| r.loss),
        label_noise_pct: level,
        test_errors: StateErrors(errors),
    };
    ctx.write_json(&dir.join("summary.json"), &summary)?;
    println!("trained {} epochs; checkpoints in {}", state.epoch, dir.display());
    Ok(())
}

fn chain_start(ds: &Dataset) -> [f64; 5] {
    ds.chain_seed().unwrap_or_else(|| ds.test[0].ic())
}

fn ensure_test(ds: &Dataset) -> Result<(), Failure> {
    if ds.test.is_empty() {
        return Err(Failure::new(2, "empty_test_set", "the dataset has no test trains"));
    }
    Ok(())
}

fn prediction_csv(ctx: &Ctx, p: &Prediction, ens: Option<&PredictionEnsemble>, truth_v: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for c in ctx.comments() {
        let _ = writeln!(s, "# {c}");
    }
    s.push_str("t,state,truth,pred,mu,sigma,band_low,band_high\n");
    let bands = ens.map(|e| (e.band_low(), e.band_high()));
    for (k, name) in EngineOutputs::NAMES.iter().enumerate() {
        for (j, t) in p.t.iter().enumerate() {
            let _ = write!(s, "{},{name},{:?},{:?}", crate::util::fmt_sig9(*t), truth_v[k][j], p.values[k][j]);
            match (ens, &bands) {
                (Some(e), Some((lo, hi))) => {
                    let _ = writeln!(s, ",{:?},{:?},{:?},{:?}", e.mean[k][j], e.std[k][j], lo[k][j], hi[k][j]);
                }
                _ => s.push_str(",,,,\n"),
            }
        }
    }
    s
}

#[derive(Serialize)]
struct PredictSummary {
    ic_source: &'static str,
    noise_pct: f64,
    n_trains: usize,
    test_span: (f64, f64),
    errors: StateErrors,
    mean_error: f64,
}

fn predict_cmd(ctx: &Ctx, chained: bool, noise_pct: f64) -> Result<(), Failure> {
    let ck = ctx.checkpoint(&ctx.run_dir())?;
    let ds = ctx.dataset()?;
    ensure_test(&ds)?;
    let spec = NoiseSpec { level_pct: noise_pct, target: NoiseTarget::Inputs, seed: ctx.cfg.pipeline.noise.seed };
    let inputs = add_awgn(&ds.test, &spec, &ck.model.norm)?;
    let source = if chained { IcSource::Chained { initial: chain_start(&ds) } } else { IcSource::GroundTruth };
    let pred = predict(&ck.model, &inputs, source)?;
    let clean = truth(&ds.test);
    let errors = StateErrors(state_errors(&pred.values, &clean).map_err(InferError::from)?);
    let stem = format!(
        "predict{}{}",
        if chained { "-chained" } else { "" },
        if noise_pct > 0.0 { format!("-noise{noise_pct}") } else { String::new() }
    );
    let dir = ctx.ws.join("predictions");
    ctx.write(&dir.join(format!("{stem}.csv")), &prediction_csv(ctx, &pred, None, &clean))?;
    let summary = PredictSummary {
        ic_source: if chained { "chained" } else { "ground_truth" },
        noise_pct,
        n_trains: ds.test.len(),
        test_span: ds.meta.test_span,
        mean_error: errors.mean(),
        errors,
    };
    ctx.write_json(&dir.join(format!("{stem}.json")), &summary)?;
    print_errors(&errors);
    Ok(())
}

fn print_errors(e: &StateErrors) {
    for (name, v) in EngineOutputs::NAMES.iter().zip(e.0) {
        println!("{name:>8}: {v:7.3} %");
    }
}

fn uncertainty_cmd(ctx: &Ctx, samples: Option<usize>) -> Result<(), Failure> {
    let ck = ctx.checkpoint(&ctx.run_dir())?;
    let ds = ctx.dataset()?;
    ensure_test(&ds)?;
    let n = samples.unwrap_or(ctx.cfg.inference.n_mc);
    let (report, ens) = uncertainty_report(&ck.model, &ds.test, n, ctx.cfg.inference.mc_seed)?;
    let det = predict(&ck.model, &ds.test, IcSource::GroundTruth)?;
    let dir = ctx.ws.join("predictions");
    ctx.write(&dir.join("uncertainty.csv"), &prediction_csv(ctx, &det, Some(&ens), &truth(&ds.test)))?;
    ctx.write_json(&dir.join("uncertainty.json"), &report)?;
    println!("ensemble of {n}: state, deterministic, mu, mu+2sigma");
    for (k, name) in EngineOutputs::NAMES.iter().enumerate() {
        println!(
            "{name:>8}: {:7.3} {:7.3} {:7.3}",
            report.deterministic.0[k], report.ensemble_mean.0[k], report.upper_band.0[k]
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluationReport {
    noise: crate::infer::NoiseTable,
    seq2seq: crate::infer::Seq2SeqReport,
    uncertainty: crate::infer::UncertaintyReport,
    label_noise: Option<LabelNoiseReport>,
}

fn evaluate_cmd(ctx: &Ctx, levels: Option<Vec<f64>>) -> Result<(), Failure> {
    let ck = ctx.checkpoint(&ctx.run_dir())?;
    let ds = ctx.dataset()?;
    ensure_test(&ds)?;
    let levels = levels.unwrap_or_else(|| ctx.cfg.pipeline.noise.input_levels.clone());
    if levels.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Failure::usage("noise levels must be non-negative"));
    }
    let noise = evaluate_noisy(&ck.model, &ds.test, &levels, ctx.cfg.pipeline.noise.seed)?;
    let seq2seq = seq2seq_report(&ck.model, &ds.test, chain_start(&ds))?;
    let (uncertainty, _) = uncertainty_report(&ck.model, &ds.test, ctx.cfg.inference.n_mc, ctx.cfg.inference.mc_seed)?;
    let level = ctx.cfg.pipeline.noise.label_level_pct;
    let label_noise = match latest_checkpoint(&ctx.label_noise_dir(level)) {
        Some((_, p)) => {
            let noisy = Checkpoint::load(&p)?;
            Some(LabelNoiseReport {
                level_pct: level,
                clean_labels: StateErrors(crate::train::test_errors(&ck.model, &ds.test)?),
                noisy_labels: StateErrors(crate::train::test_errors(&noisy.model, &ds.test)?),
            })
        }
        None => None,
    };
    let report = EvaluationReport { noise, seq2seq, uncertainty, label_noise };
    let path = ctx.ws.join("reports").join("evaluate.json");
    ctx.write_json(&path, &report)?;
    println!("noise level: mean error over states");
    for row in &report.noise.rows {
        println!("{:>5} %: {:7.3} %", row.level_pct, row.mean);
    }
    println!("wrote {}", path.display());
    Ok(())
}

const COLORS: [&str; 3] = ["#000000", "#d62728", "#1f77b4"];

fn plot_cmd(ctx: &Ctx, start: f64, length: f64, chained: bool) -> Result<(), Failure> {
    let ck = ctx.checkpoint(&ctx.run_dir())?;
    let ds = ctx.dataset()?;
    ensure_test(&ds)?;
    if !(length > 0.0 && start >= 0.0) {
        return Err(Failure::usage("--length must be positive and --start non-negative"));
    }
    let source = if chained { IcSource::Chained { initial: chain_start(&ds) } } else { IcSource::GroundTruth };
    let pred = predict(&ck.model, &ds.test, source)?;
    let clean = truth(&ds.test);
    let t0 = ds.test[0].t0 + start;
    let sel: Vec<usize> = (0..pred.t.len()).filter(|&j| pred.t[j] >= t0 && pred.t[j] < t0 + length).collect();
    if sel.is_empty() {
        return Err(Failure::usage(format!("window [{t0}, {}) s lies outside the test span", t0 + length)));
    }
    let dir = ctx.ws.join("plots");
    let x: Vec<f64> = sel.iter().map(|&j| pred.t[j]).collect();
    let label = if chained { "prediction (chained IC)" } else { "prediction" };
    for (k, name) in EngineOutputs::NAMES.iter().enumerate() {
        let mut chart = Chart::new(&format!("{name} [{}]", ctx.hash), "t [s]", name);
        chart.series.push(Series::new("truth", COLORS[0], &x, &sel.iter().map(|&j| clean[k][j]).collect::<Vec<_>>()));
        chart.series.push(
            Series::new(label, COLORS[1], &x, &sel.iter().map(|&j| pred.values[k][j]).collect::<Vec<_>>()).dashed(),
        );
        ctx.write(&dir.join(format!("{name}.svg")), &chart.to_svg())?;
    }
    let report = seq2seq_report(&ck.model, &ds.test, chain_start(&ds))?;
    let mut chart = Chart::new(&format!("accumulated error [{}]", ctx.hash), "t [s]", "error [%]");
    let palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"];
    for k in 0..N_STATES {
        let name = EngineOutputs::NAMES[k];
        chart.series.push(Series::new(
            &format!("{name} recorded IC"),
            palette[k],
            &pred.t,
            &report.cumulative_ground_truth[k],
        ));
        chart
            .series
            .push(Series::new(&format!("{name} chained"), palette[k], &pred.t, &report.cumulative_chained[k]).dashed());
    }
    chart.height = 480.0;
    ctx.write(&dir.join("cumulative_error.svg"), &chart.to_svg())?;
    if ck.model.has_dropout() {
        let (_, ens) = uncertainty_report(&ck.model, &ds.test, ctx.cfg.inference.n_mc, ctx.cfg.inference.mc_seed)?;
        let (lo, hi) = (ens.band_low(), ens.band_high());
        for (k, name) in EngineOutputs::NAMES.iter().enumerate() {
            let pick = |v: &Vec<Vec<f64>>| sel.iter().map(|&j| v[k][j]).collect::<Vec<_>>();
            let mut chart = Chart::new(&format!("{name} ensemble [{}]", ctx.hash), "t [s]", name);
            chart.bands.push(Band { color: COLORS[2].into(), x: x.clone(), low: pick(&lo), high: pick(&hi) });
            chart.series.push(Series::new("truth", COLORS[0], &x, &pick(&clean)));
            chart.series.push(Series::new("ensemble mean", COLORS[2], &x, &pick(&ens.mean)).dashed());
            ctx.write(&dir.join(format!("{name}_ensemble.svg")), &chart.to_svg())?;
        }
    }
    println!("wrote plots to {}", dir.display());
    Ok(())
}
