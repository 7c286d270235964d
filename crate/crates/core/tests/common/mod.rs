#![allow(dead_code)]

use engine_deeponet::data::{prepare, synthesize, CycleConfig, Dataset, PipelineConfig};
use engine_deeponet::engine::EngineParams;

/// A 10-minute cycle with a 100 s test span.
pub fn small_dataset() -> Dataset {
    let cycle = CycleConfig { duration: 600.0, ..Default::default() };
    let traj = synthesize(&EngineParams::default(), &cycle).unwrap();
    prepare(&traj, &PipelineConfig { test_length: 100.0, ..Default::default() }, &cycle.bounds).unwrap()
}
