//! Simulate a synthetic drive cycle, cut it into signal trains and write the
//! dataset directory.
//!
//! cargo run --release --example prepare_dataset -- [out_dir] [duration_s]

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use engine_deeponet::data::{prepare, save_dataset, synthesize, CycleConfig, PipelineConfig};
use engine_deeponet::engine::EngineParams;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/synth-dataset".into()));
    let duration: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7200.0);

    let params = EngineParams::default();
    let cycle = CycleConfig { duration, ..Default::default() };
    let started = Instant::now();
    let traj = synthesize(&params, &cycle)?;
    println!("simulated {} samples in {:.1} s", traj.len(), started.elapsed().as_secs_f64());

    let pipeline = PipelineConfig { test_length: (duration / 7.2).round().min(1000.0), ..Default::default() };
    let ds = prepare(&traj, &pipeline, &cycle.bounds)?;
    println!(
        "{} trains: {} train / {} test, test span {:?}",
        ds.trains.len(),
        ds.train.len(),
        ds.test.len(),
        ds.meta.test_span
    );
    for (name, s) in engine_deeponet::engine::EngineOutputs::NAMES.iter().zip(&ds.meta.norm.outputs) {
        println!("  {name:>8}: mean {:>12.4} std {:>12.4}", s.mean, s.std);
    }
    save_dataset(&ds, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
