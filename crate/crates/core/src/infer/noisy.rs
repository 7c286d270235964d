use serde::{Deserialize, Serialize};

use super::{predict, state_errors, truth, IcSource, InferError, StateErrors};
use crate::data::{add_awgn, NoiseSpec, NoiseTarget, SignalTrain};
use crate::deeponet::DeepOnet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub level_pct: f64,
    /// Relative L2 error [%] per state.
    pub errors: StateErrors,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTable {
    pub seed: u64,
    pub rows: Vec<NoiseRow>,
}

/// Perturbs the four input channels of `test` at each level (ICs stay
/// clean), predicts with recorded ICs and scores against the clean targets.
pub fn evaluate_noisy(
    model: &DeepOnet,
    test: &[SignalTrain],
    levels: &[f64],
    seed: u64,
) -> Result<NoiseTable, InferError> {
    let clean = truth(test);
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let spec = NoiseSpec { level_pct: level, target: NoiseTarget::Inputs, seed };
        let noisy = add_awgn(test, &spec, &model.norm)?;
        let pred = predict(model, &noisy, IcSource::GroundTruth)?;
        let errors = StateErrors(state_errors(&pred.values, &clean)?);
        rows.push(NoiseRow { level_pct: level, mean: errors.mean(), errors });
    }
    Ok(NoiseTable { seed, rows })
}
