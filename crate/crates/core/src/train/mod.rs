//! Mini-batch training loop with the step-wise learning rate, self-adaptive
//! weights, periodic test evaluation and checkpointing.

mod metrics_log;

pub use metrics_log::{MetricsLog, MetricsRow, METRICS_HEADER};

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array3, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{add_awgn, NoiseSpec, NoiseTarget, NormStats, SignalTrain, N_STATES};
use crate::deeponet::{
    checkpoint_path, loss, prune_checkpoints, target_tensor, ArchSpec, BranchInputs, Checkpoint, CheckpointError,
    DeepOnet, LossKind, ModelAdam, ModelError, SaWeights, TrainingMeta, SA_RATE,
};
use crate::infer::{predict, state_errors, truth, IcSource, InferError};
use crate::nn::{LrSchedule, Mode};
use crate::util::mix_seeds;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite training loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Trains per mini-batch; the whole set when larger than it.
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs between checkpoints; 0 disables intermediate checkpoints.
    pub checkpoint_every: usize,
    /// Epochs between test evaluations.
    pub eval_every: usize,
    pub loss: LossKind,
    pub sa_rate: f64,
    pub schedule: LrSchedule,
    /// Checkpoints kept on disk.
    pub keep_checkpoints: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20_000,
            batch_size: 256,
            seed: 0,
            checkpoint_every: 500,
            eval_every: 100,
            loss: LossKind::L2Sa,
            sa_rate: SA_RATE,
            schedule: LrSchedule::default(),
            keep_checkpoints: 2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(TrainError::Config("eval_every must be positive".into()));
        }
        if !(self.sa_rate >= 0.0 && self.sa_rate.is_finite()) {
            return Err(TrainError::Config("sa_rate must be finite and non-negative".into()));
        }
        self.schedule.validate().map_err(|e| TrainError::Config(e.to_string()))
    }
}

/// Model, optimizer and loss weights at an epoch boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: DeepOnet,
    pub adam: ModelAdam,
    pub sa: SaWeights,
    /// Completed epochs.
    pub epoch: usize,
}

impl TrainState {
    pub fn fresh(arch: ArchSpec, norm: NormStats, cfg: &TrainConfig) -> Result<Self, TrainError> {
        let model = DeepOnet::new(arch, norm, cfg.seed)?;
        let adam = ModelAdam::new(&model);
        Ok(Self { model, adam, sa: SaWeights::new(cfg.sa_rate), epoch: 0 })
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self, TrainError> {
        let adam =
            ckpt.adam.ok_or_else(|| TrainError::Config("checkpoint has no optimizer state to resume from".into()))?;
        Ok(Self { model: ckpt.model, adam, sa: ckpt.sa, epoch: ckpt.meta.epoch })
    }

    pub fn to_checkpoint(&self, seed: u64, config_hash: &str) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            sa: self.sa.clone(),
            adam: Some(self.adam.clone()),
            meta: TrainingMeta {
                epoch: self.epoch,
                seed,
                config_hash: config_hash.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }
}

/// Receives metrics rows and checkpoint opportunities during training.
pub trait TrainObserver {
    fn on_eval(&mut self, _row: &MetricsRow) -> Result<(), TrainError> {
        Ok(())
    }
    fn on_checkpoint(&mut self, _state: &TrainState) -> Result<(), TrainError> {
        Ok(())
    }
}

/// Discards everything.
pub struct NoObserver;

impl TrainObserver for NoObserver {}

/// Appends metrics to `metrics.csv` and writes atomic checkpoints into a
/// run directory, keeping the newest few.
pub struct RunDir {
    pub dir: PathBuf,
    pub config_hash: String,
    pub seed: u64,
    pub keep: usize,
    /// Print one line per evaluation.
    pub verbose: bool,
}

impl RunDir {
    pub fn metrics_path(&self) -> PathBuf {
        self.dir.join("metrics.csv")
    }
}

impl TrainObserver for RunDir {
    fn on_eval(&mut self, row: &MetricsRow) -> Result<(), TrainError> {
        let path = self.metrics_path();
        metrics_log::append_row(&path, row, &self.config_hash).map_err(|source| TrainError::Io { path, source })?;
        if self.verbose {
            let errs: Vec<String> = row.errors.iter().map(|e| format!("{e:.2}")).collect();
            eprintln!("epoch {:>6}  loss {:.3e}  lr {:.0e}  err% [{}]", row.epoch, row.loss, row.lr, errs.join(" "));
        }
        Ok(())
    }

    fn on_checkpoint(&mut self, state: &TrainState) -> Result<(), TrainError> {
        state.to_checkpoint(self.seed, &self.config_hash).save(&checkpoint_path(&self.dir, state.epoch))?;
        prune_checkpoints(&self.dir, self.keep.max(1))?;
        Ok(())
    }
}

/// Relative L2 error [%] per state on `trains`, eval mode, recorded ICs.
pub fn test_errors(model: &DeepOnet, trains: &[SignalTrain]) -> Result<[f64; N_STATES], TrainError> {
    let pred = predict(model, trains, IcSource::GroundTruth)?;
    Ok(state_errors(&pred.values, &truth(trains)).map_err(InferError::from)?)
}

/// Shuffled order of training trains for `epoch`.
pub fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seeds(seed, &[1, epoch as u64])));
    idx
}

/// Dropout seed for one mini-batch.
pub fn batch_seed(seed: u64, epoch: usize, batch: usize) -> u64 {
    mix_seeds(seed, &[2, epoch as u64, batch as u64])
}

/// Runs one epoch and returns the mean training loss.
pub fn run_epoch(
    state: &mut TrainState,
    inputs: &BranchInputs,
    targets: &Array3<f64>,
    cfg: &TrainConfig,
) -> Result<f64, TrainError> {
    let epoch = state.epoch;
    let lr = cfg.schedule.rate(epoch);
    let order = epoch_order(cfg.seed, epoch, inputs.len());
    let mut total = 0.0;
    for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
        let x = inputs.select(idx);
        let y = targets.select(Axis(0), idx);
        let (pred, tape) = state.model.forward(&x, Mode::Train, batch_seed(cfg.seed, epoch, b))?;
        let out = loss(&pred, &y, &state.sa, cfg.loss);
        if !out.loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        let grads = state.model.backward(&tape, &out.grad)?;
        state.adam.step(&mut state.model, &grads, lr)?;
        if cfg.loss == LossKind::L2Sa {
            state.sa.update(&out.residuals);
        }
        total += out.loss * idx.len() as f64;
    }
    state.epoch += 1;
    Ok(total / inputs.len() as f64)
}

/// Trains from `state.epoch` up to `cfg.epochs`. Metrics rows are produced
/// every `eval_every` epochs and at the end; checkpoints every
/// `checkpoint_every` epochs and at the end.
pub fn train(
    state: &mut TrainState,
    train_set: &[SignalTrain],
    test_set: &[SignalTrain],
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<MetricsLog, TrainError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::Config("training set is empty".into()));
    }
    let inputs = BranchInputs::from_trains(train_set, &state.model.norm);
    let targets = target_tensor(train_set, &state.model.norm);
    let started = Instant::now();
    let mut log = MetricsLog::default();
    while state.epoch < cfg.epochs {
        let epoch_loss = run_epoch(state, &inputs, &targets, cfg)?;
        let done = state.epoch == cfg.epochs;
        if state.epoch % cfg.eval_every == 0 || done {
            let errors = if test_set.is_empty() { [f64::NAN; N_STATES] } else { test_errors(&state.model, test_set)? };
            let row = MetricsRow {
                epoch: state.epoch,
                loss: epoch_loss,
                lr: cfg.schedule.rate(state.epoch),
                errors,
                seconds: started.elapsed().as_secs_f64(),
            };
            observer.on_eval(&row)?;
            log.rows.push(row);
        }
        if (cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0) || done {
            observer.on_checkpoint(state)?;
        }
    }
    Ok(log)
}

/// Training set with `level_pct` % noise on its seven target channels (ICs
/// re-read from the noisy first points), plus normalization refitted on it.
pub fn noisy_label_set(
    train_set: &[SignalTrain],
    clean_norm: &NormStats,
    level_pct: f64,
    noise_seed: u64,
) -> Result<(Vec<SignalTrain>, NormStats), TrainError> {
    let spec = NoiseSpec { level_pct, target: NoiseTarget::Outputs, seed: noise_seed };
    let noisy = add_awgn(train_set, &spec, clean_norm)?;
    let (norm, _) = NormStats::fit(&noisy)?;
    Ok((noisy, norm))
}

/// Trains a fresh model on noisy labels; `test_set` stays clean.
#[allow(clippy::too_many_arguments)]
pub fn train_noisy_labels(
    train_set: &[SignalTrain],
    test_set: &[SignalTrain],
    clean_norm: &NormStats,
    level_pct: f64,
    noise_seed: u64,
    arch: ArchSpec,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<(TrainState, MetricsLog), TrainError> {
    let (noisy, norm) = noisy_label_set(train_set, clean_norm, level_pct, noise_seed)?;
    let mut state = TrainState::fresh(arch, norm, cfg)?;
    let log = train(&mut state, &noisy, test_set, cfg, observer)?;
    Ok((state, log))
}

/// Loads the newest checkpoint in `dir` if there is one.
pub fn resume_from(dir: &Path) -> Result<Option<TrainState>, TrainError> {
    match crate::deeponet::latest_checkpoint(dir) {
        Some((_, path)) => Ok(Some(TrainState::from_checkpoint(Checkpoint::load(&path)?)?)),
        None => Ok(None),
    }
}
