use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::norm::NormStats;
use super::train::{SignalTrain, N_INPUTS, N_STATES};
use super::DataError;
use crate::util::mix_seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    Inputs,
    Outputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Noise standard deviation as a percentage of the channel's training std.
    pub level_pct: f64,
    pub target: NoiseTarget,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.level_pct >= 0.0 && self.level_pct.is_finite()) {
            return Err(DataError::Config(format!("noise level {} % must be non-negative", self.level_pct)));
        }
        Ok(())
    }
}

/// Adds `N(0, σ²)` to every value in place, drawing from `rng`.
pub fn add_gaussian(values: &mut [f64], sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma == 0.0 {
        return;
    }
    let dist = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    for v in values {
        *v += dist.sample(rng);
    }
}

fn channel_rng(spec: &NoiseSpec, channel: usize) -> ChaCha8Rng {
    let tag = match spec.target {
        NoiseTarget::Inputs => 0,
        NoiseTarget::Outputs => 1,
    };
    ChaCha8Rng::seed_from_u64(mix_seeds(spec.seed, &[tag, channel as u64]))
}

/// Returns a noisy copy of `trains`. Each targeted channel gets
/// `σ = level_pct/100 · σ_train` with its own random stream. Output noise also
/// refreshes the initial-condition fields from the noisy first point, the way
/// they would be read off a noisy measurement.
pub fn add_awgn(trains: &[SignalTrain], spec: &NoiseSpec, stats: &NormStats) -> Result<Vec<SignalTrain>, DataError> {
    spec.validate()?;
    let mut out = trains.to_vec();
    if spec.level_pct == 0.0 {
        return Ok(out);
    }
    let frac = spec.level_pct / 100.0;
    match spec.target {
        NoiseTarget::Inputs => {
            for c in 0..N_INPUTS {
                let mut rng = channel_rng(spec, c);
                let sigma = frac * stats.inputs[c].std;
                for t in &mut out {
                    add_gaussian(&mut t.window[c], sigma, &mut rng);
                }
            }
        }
        NoiseTarget::Outputs => {
            for k in 0..N_STATES {
                let mut rng = channel_rng(spec, k);
                let sigma = frac * stats.outputs[k].std;
                for t in &mut out {
                    add_gaussian(&mut t.targets[k], sigma, &mut rng);
                }
            }
            for t in &mut out {
                t.refresh_ic_from_targets();
            }
        }
    }
    Ok(out)
}
