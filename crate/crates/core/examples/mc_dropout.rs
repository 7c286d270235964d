//! Monte Carlo dropout ensemble: errors of the deterministic prediction, the
//! ensemble mean and the mu +/- 2 sigma traces.
//!
//! cargo run --release --example mc_dropout -- <dataset_dir> <run_dir> [samples]

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use engine_deeponet::data::load_dataset;
use engine_deeponet::engine::EngineOutputs;
use engine_deeponet::infer::uncertainty_report;
use engine_deeponet::train::resume_from;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let ds = load_dataset(&PathBuf::from(args.next().context("dataset directory required")?))?;
    let state =
        resume_from(&PathBuf::from(args.next().context("run directory required")?))?.context("no checkpoint")?;
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);

    let started = Instant::now();
    let (r, ens) = uncertainty_report(&state.model, &ds.test, n, 5)?;
    println!("{n} samples in {:.1} s", started.elapsed().as_secs_f64());
    println!("{:>8} {:>8} {:>8} {:>8} {:>8} {:>12}", "state", "det", "mu", "mu+2s", "mu-2s", "mean sigma");
    for (k, name) in EngineOutputs::NAMES.iter().enumerate() {
        let sigma = ens.std[k].iter().sum::<f64>() / ens.std[k].len() as f64;
        println!(
            "{name:>8} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {sigma:>12.4e}",
            r.deterministic.0[k], r.ensemble_mean.0[k], r.upper_band.0[k], r.lower_band.0[k]
        );
    }
    Ok(())
}
