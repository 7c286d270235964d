//! Train the surrogate on a prepared dataset directory and report per-state
//! test errors.
//!
//! cargo run --release --example train_surrogate -- <dataset_dir> <run_dir> [epochs]

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use engine_deeponet::data::load_dataset;
use engine_deeponet::deeponet::ArchSpec;
use engine_deeponet::engine::EngineOutputs;
use engine_deeponet::nn::LrSchedule;
use engine_deeponet::train::{resume_from, train, MetricsLog, RunDir, TrainConfig, TrainState};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let data_dir = PathBuf::from(args.next().context("dataset directory required")?);
    let run_dir = PathBuf::from(args.next().context("run directory required")?);
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3000);

    let ds = load_dataset(&data_dir)?;
    let cfg = TrainConfig {
        epochs,
        seed: 7,
        checkpoint_every: (epochs / 6).max(1),
        eval_every: (epochs / 30).max(1),
        schedule: LrSchedule::scaled_to(epochs),
        ..Default::default()
    };
    let mut state = match resume_from(&run_dir)? {
        Some(s) => {
            println!("resuming at epoch {}", s.epoch);
            MetricsLog::truncate_file(&run_dir.join("metrics.csv"), s.epoch, "example")?;
            s
        }
        None => TrainState::fresh(ArchSpec::default(), ds.meta.norm.clone(), &cfg)?,
    };
    println!("{} parameters, {} training trains", state.model.param_count(), ds.train.len());
    let mut observer = RunDir { dir: run_dir, config_hash: "example".into(), seed: cfg.seed, keep: 2, verbose: true };
    let started = Instant::now();
    let log = train(&mut state, &ds.train, &ds.test, &cfg, &mut observer)?;
    println!("trained to epoch {} in {:.1} s", state.epoch, started.elapsed().as_secs_f64());
    if let Some(last) = log.rows.last() {
        for (name, e) in EngineOutputs::NAMES.iter().zip(last.errors) {
            println!("  {name:>8}: {e:6.2} %");
        }
    }
    Ok(())
}
