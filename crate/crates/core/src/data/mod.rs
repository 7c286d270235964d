//! Drive-cycle synthesis, windowing into signal trains, normalization,
//! train/test partitioning and noise injection.

mod cycle;
mod noise;
mod norm;
mod store;
mod train;

pub use cycle::{generate_drive_cycle, InputBounds};
pub use noise::{add_awgn, add_gaussian, NoiseSpec, NoiseTarget};
pub use norm::{ChannelStats, FitReport, NormStats, STD_FLOOR};
pub use store::{load_dataset, save_dataset, trains_from_csv, trains_to_csv, Dataset, DatasetMeta, DATASET_VERSION};
pub use train::{
    choose_test_span, split, windowize, SignalTrain, IC_STATES, N_IC, N_INPUTS, N_STATES, SAMPLE_PERIOD, WINDOW,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{settle, simulate, EngineError, EngineParams, EngineState, Trajectory};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("trajectory has {samples} samples; at least {WINDOW} are needed for one train")]
    EmptyDataset { samples: usize },
    #[error("no training trains remain after the split")]
    EmptyTraining,
    #[error("test span error: {0}")]
    Span(String),
    #[error("simulation failed: {0}")]
    Engine(#[from] EngineError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },
}

/// Drive-cycle synthesis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleConfig {
    /// Cycle length [s].
    pub duration: f64,
    pub seed: u64,
    pub bounds: InputBounds,
    /// Settling time under the first input before recording starts [s].
    pub warmup: f64,
    /// Integrator step [s].
    pub dt_int: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self { duration: 7200.0, seed: 2024, bounds: InputBounds::default(), warmup: 60.0, dt_int: 0.01 }
    }
}

/// Windowing and partitioning settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Points per train; fixed by the model architecture.
    pub window: usize,
    /// Samples between consecutive train starts; equal to the window for
    /// non-overlapping trains.
    pub stride: usize,
    /// Explicit test span `[start, end)` in seconds; chosen automatically when absent.
    pub test_span: Option<(f64, f64)>,
    /// Length of the automatically chosen test span [s].
    pub test_length: f64,
    pub noise: NoiseConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { window: WINDOW, stride: WINDOW, test_span: None, test_length: 1000.0, noise: NoiseConfig::default() }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.window != WINDOW {
            return Err(DataError::Config(format!("window must be {WINDOW} points, got {}", self.window)));
        }
        if self.stride == 0 {
            return Err(DataError::Config("stride must be positive".into()));
        }
        if self.stride != WINDOW && self.test_span.is_none() {
            return Err(DataError::Config("overlapping strides need an explicit test span".into()));
        }
        if self.noise.input_levels.iter().chain([&self.noise.label_level_pct]).any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(DataError::Config("noise levels must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Noise levels used by the robustness studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    /// Input-noise levels [%] for evaluation sweeps.
    pub input_levels: Vec<f64>,
    /// Label-noise level [%] for noisy-label training.
    pub label_level_pct: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { seed: 99, input_levels: vec![0.0, 1.0, 2.0, 3.0], label_level_pct: 3.0 }
    }
}

/// Synthesizes a drive cycle and simulates the engine over it, starting from
/// the state reached after `warmup` seconds under the cycle's first input.
pub fn synthesize(params: &EngineParams, cfg: &CycleConfig) -> Result<Trajectory, DataError> {
    params.validate()?;
    let inputs = generate_drive_cycle(cfg.duration, cfg.seed, &cfg.bounds)?;
    let s0 = settle(&inputs[0], EngineState::ambient(params), params, cfg.warmup, cfg.dt_int)?;
    Ok(simulate(&inputs, s0, params, cfg.dt_int)?)
}

/// Windows a trajectory, splits off the test span and fits normalization on
/// the training part.
pub fn prepare(traj: &Trajectory, pipeline: &PipelineConfig, bounds: &InputBounds) -> Result<Dataset, DataError> {
    pipeline.validate()?;
    let trains = windowize(traj, pipeline.stride)?;
    let span = match pipeline.test_span {
        Some(s) => s,
        None => choose_test_span(&trains, pipeline.test_length, bounds.n_e.0)?,
    };
    Dataset::from_trains(trains, span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_synthesis_and_prepare() {
        let params = EngineParams::default();
        let cfg = CycleConfig { duration: 300.0, warmup: 10.0, ..Default::default() };
        let traj = synthesize(&params, &cfg).unwrap();
        assert_eq!(traj.len(), 600);
        let pipe = PipelineConfig { test_length: 50.0, ..Default::default() };
        let ds = prepare(&traj, &pipe, &cfg.bounds).unwrap();
        assert_eq!(ds.train.len() + ds.test.len(), 60);
        assert_eq!(ds.test.len(), 10);
        assert!(ds.meta.norm.all_finite());
    }
}
