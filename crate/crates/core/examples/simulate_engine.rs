//! Run the mean-value engine model: settle at a steady operating point, step
//! the fueling up and print the response at 2 Hz.
//!
//! cargo run --release --example simulate_engine

use anyhow::Result;
use engine_deeponet::engine::{settle, simulate, EngineInputs, EngineOutputs, EngineParams, EngineState};

fn main() -> Result<()> {
    let p = EngineParams::default();
    let base = EngineInputs::new(1500.0, 100.0, 30.0, 60.0);
    let s0 = settle(&base, EngineState::ambient(&p), &p, 120.0, 0.01)?;

    let mut inputs = vec![base; 4];
    inputs.extend(std::iter::repeat(EngineInputs { u_delta: 160.0, ..base }).take(36));
    let traj = simulate(&inputs, s0, &p, 0.01)?;

    print!("{:>6}", "t [s]");
    for name in EngineOutputs::NAMES {
        print!(" {name:>11}");
    }
    println!();
    for s in traj.samples.iter().step_by(2) {
        print!("{:>6.1}", s.t);
        for v in s.outputs.to_array() {
            print!(" {v:>11.4}");
        }
        println!();
    }
    Ok(())
}
