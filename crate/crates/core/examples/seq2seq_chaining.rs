//! Compare recorded initial conditions with chained ones (each train starts
//! from the previous train's predicted last point) over the test span.
//!
//! cargo run --release --example seq2seq_chaining -- <dataset_dir> <run_dir>

use std::path::PathBuf;

use anyhow::{Context, Result};
use engine_deeponet::data::load_dataset;
use engine_deeponet::engine::EngineOutputs;
use engine_deeponet::infer::seq2seq_report;
use engine_deeponet::train::resume_from;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let ds = load_dataset(&PathBuf::from(args.next().context("dataset directory required")?))?;
    let state =
        resume_from(&PathBuf::from(args.next().context("run directory required")?))?.context("no checkpoint")?;
    let initial = ds.chain_seed().context("test span starts at the first train")?;

    let r = seq2seq_report(&state.model, &ds.test, initial)?;
    println!("{:>8} {:>10} {:>10}", "state", "recorded", "chained");
    for (k, name) in EngineOutputs::NAMES.iter().enumerate() {
        println!("{name:>8} {:>9.3}% {:>9.3}%", r.ground_truth.0[k], r.chained.0[k]);
    }
    // accumulated error at a few horizons
    let n = r.cumulative_chained[0].len();
    for frac in [0.1, 0.5, 1.0] {
        let j = ((n as f64 * frac) as usize).max(1) - 1;
        let row: Vec<String> = r.cumulative_chained.iter().map(|c| format!("{:.2}", c[j])).collect();
        println!("chained, first {:>4.0} s: [{}]", (j + 1) as f64 * 0.5, row.join(" "));
    }
    Ok(())
}
