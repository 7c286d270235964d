use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::engine::EngineInputs;
use crate::util::mix_seed;

/// Inclusive `(low, high)` range per input channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBounds {
    pub n_e: (f64, f64),
    pub u_delta: (f64, f64),
    pub u_egr: (f64, f64),
    pub u_vgt: (f64, f64),
}

impl Default for InputBounds {
    fn default() -> Self {
        Self { n_e: (600.0, 2000.0), u_delta: (20.0, 220.0), u_egr: (0.0, 80.0), u_vgt: (20.0, 100.0) }
    }
}

impl InputBounds {
    pub fn channels(&self) -> [(f64, f64); 4] {
        [self.n_e, self.u_delta, self.u_egr, self.u_vgt]
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let limits = [
            EngineInputs::N_E_RANGE,
            EngineInputs::U_DELTA_RANGE,
            EngineInputs::VALVE_RANGE,
            EngineInputs::VALVE_RANGE,
        ];
        for (k, ((lo, hi), (min, max))) in self.channels().into_iter().zip(limits).enumerate() {
            if !(lo <= hi && lo >= min && hi <= max) {
                return Err(DataError::Config(format!("input bounds for channel {k} must lie inside [{min}, {max}]")));
            }
        }
        Ok(())
    }
}

const SAMPLE_PERIOD: f64 = 0.5;
const DWELL_RANGE: (f64, f64) = (5.0, 60.0);
const SMOOTHING_TAU: f64 = 2.0;

/// Random drive cycle at 2 Hz: per channel, piecewise-constant set-points
/// (uniform within bounds, dwell uniform in 5–60 s) passed through a
/// first-order smoother with a 2 s time constant.
pub fn generate_drive_cycle(duration: f64, seed: u64, bounds: &InputBounds) -> Result<Vec<EngineInputs>, DataError> {
    if !(duration >= 10.0) {
        return Err(DataError::Config(format!("drive cycle duration {duration} s is shorter than 10 s")));
    }
    bounds.validate()?;
    let n = (duration / SAMPLE_PERIOD).round() as usize;
    let alpha = 1.0 - (-SAMPLE_PERIOD / SMOOTHING_TAU).exp();
    let mut channels = [vec![], vec![], vec![], vec![]];
    for (c, (lo, hi)) in bounds.channels().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, c as u64));
        let draw = |rng: &mut ChaCha8Rng| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let mut setpoint = draw(&mut rng);
        let mut remaining = 0usize;
        let mut y = setpoint;
        let out = &mut channels[c];
        out.reserve(n);
        for k in 0..n {
            if remaining == 0 {
                if k > 0 {
                    setpoint = draw(&mut rng);
                }
                let dwell = rng.gen_range(DWELL_RANGE.0..=DWELL_RANGE.1);
                remaining = ((dwell / SAMPLE_PERIOD).round() as usize).max(1);
            }
            remaining -= 1;
            y += alpha * (setpoint - y);
            out.push(y.clamp(lo, hi));
        }
    }
    Ok((0..n).map(|k| EngineInputs::new(channels[0][k], channels[1][k], channels[2][k], channels[3][k])).collect())
}
