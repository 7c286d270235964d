//! Finite-difference check of the full 9-branch / 7-trunk model with its
//! dropout masks frozen.
//!
//! cargo run --release --example gradient_check -- [n_params]

use std::time::Instant;

use anyhow::Result;
use engine_deeponet::data::{prepare, synthesize, CycleConfig, PipelineConfig};
use engine_deeponet::deeponet::{gradient_check, target_tensor, ArchSpec, BranchInputs, DeepOnet};
use engine_deeponet::engine::EngineParams;

fn main() -> Result<()> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(200);

    let cycle = CycleConfig { duration: 300.0, ..Default::default() };
    let traj = synthesize(&EngineParams::default(), &cycle)?;
    let ds = prepare(&traj, &PipelineConfig { test_length: 50.0, ..Default::default() }, &cycle.bounds)?;
    let batch = &ds.train[..8];

    let mut model = DeepOnet::new(ArchSpec::default(), ds.meta.norm.clone(), 3)?;
    let inputs = BranchInputs::from_trains(batch, &model.norm);
    let target = target_tensor(batch, &model.norm);

    let started = Instant::now();
    let checks = gradient_check(&mut model, &inputs, &target, 11, n, 17, 1e-5)?;
    let worst = checks.iter().max_by(|a, b| a.rel_error().total_cmp(&b.rel_error())).expect("non-empty");
    println!(
        "{} of {} parameters checked in {:.1} s",
        checks.len(),
        model.param_count(),
        started.elapsed().as_secs_f64()
    );
    println!(
        "worst: param {} analytic {:.6e} numeric {:.6e} rel {:.2e}",
        worst.index,
        worst.analytic,
        worst.numeric,
        worst.rel_error()
    );
    let failed = checks.iter().filter(|c| c.rel_error() >= 1e-4).count();
    println!("{failed} above 1e-4");
    Ok(())
}
