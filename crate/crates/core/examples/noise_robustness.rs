//! Score a clean-trained model on test inputs with 0-3 % Gaussian noise,
//! under several noise seeds.
//!
//! cargo run --release --example noise_robustness -- <dataset_dir> <run_dir>

use std::path::PathBuf;

use anyhow::{Context, Result};
use engine_deeponet::data::load_dataset;
use engine_deeponet::engine::EngineOutputs;
use engine_deeponet::infer::evaluate_noisy;
use engine_deeponet::train::resume_from;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let ds = load_dataset(&PathBuf::from(args.next().context("dataset directory required")?))?;
    let state =
        resume_from(&PathBuf::from(args.next().context("run directory required")?))?.context("no checkpoint")?;

    for seed in [99, 100, 101] {
        let table = evaluate_noisy(&state.model, &ds.test, &[0.0, 1.0, 2.0, 3.0], seed)?;
        println!("noise seed {seed}");
        println!("  {:>5} {}", "level", EngineOutputs::NAMES.map(|n| format!("{n:>8}")).join(""));
        for row in &table.rows {
            let cells: String = row.errors.0.iter().map(|e| format!("{e:>8.3}")).collect();
            println!("  {:>4}% {cells}  mean {:.3}", row.level_pct, row.mean);
        }
    }
    Ok(())
}
