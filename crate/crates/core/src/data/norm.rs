use serde::{Deserialize, Serialize};

use super::train::{SignalTrain, N_IC, N_INPUTS, N_STATES, WINDOW};
use super::DataError;

/// Lower bound applied to every standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

/// Mean and standard deviation of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
}

impl ChannelStats {
    fn fit(values: impl Iterator<Item = f64>) -> (Self, bool) {
        let v: Vec<f64> = values.collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        let guarded = !(std >= STD_FLOOR);
        (Self { mean, std: if guarded { STD_FLOOR } else { std } }, guarded)
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Z-score statistics fitted on training trains only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormStats {
    pub inputs: [ChannelStats; N_INPUTS],
    /// `[P_im, P_em, omega_t, u_egr, u_vgt]`.
    pub ic: [ChannelStats; N_IC],
    pub outputs: [ChannelStats; N_STATES],
}

/// Channels whose standard deviation fell below [`STD_FLOOR`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FitReport {
    pub guarded: Vec<String>,
}

impl FitReport {
    pub fn is_clean(&self) -> bool {
        self.guarded.is_empty()
    }
}

impl NormStats {
    pub fn fit(trains: &[SignalTrain]) -> Result<(Self, FitReport), DataError> {
        if trains.is_empty() {
            return Err(DataError::EmptyTraining);
        }
        let mut report = FitReport::default();
        let mut note = |group: &str, k: usize, (s, guarded): (ChannelStats, bool)| {
            if guarded {
                report.guarded.push(format!("{group}[{k}]"));
            }
            s
        };
        let inputs =
            std::array::from_fn(|c| note("inputs", c, ChannelStats::fit(trains.iter().flat_map(|t| t.window[c]))));
        let ic = std::array::from_fn(|c| note("ic", c, ChannelStats::fit(trains.iter().map(|t| t.ic()[c]))));
        let outputs =
            std::array::from_fn(|k| note("outputs", k, ChannelStats::fit(trains.iter().flat_map(|t| t.targets[k]))));
        Ok((Self { inputs, ic, outputs }, report))
    }

    pub fn input_window(&self, t: &SignalTrain) -> [[f64; WINDOW]; N_INPUTS] {
        std::array::from_fn(|c| t.window[c].map(|x| self.inputs[c].apply(x)))
    }

    pub fn ic_vector(&self, ic: &[f64; N_IC]) -> [f64; N_IC] {
        std::array::from_fn(|c| self.ic[c].apply(ic[c]))
    }

    pub fn targets(&self, t: &SignalTrain) -> [[f64; WINDOW]; N_STATES] {
        std::array::from_fn(|k| t.targets[k].map(|x| self.outputs[k].apply(x)))
    }

    pub fn denormalize_output(&self, k: usize, z: f64) -> f64 {
        self.outputs[k].invert(z)
    }

    pub fn all_finite(&self) -> bool {
        self.inputs.iter().chain(&self.ic).chain(&self.outputs).all(|s| s.mean.is_finite() && s.std.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_channel() {
        let s = ChannelStats { mean: 5.0, std: 2.0 };
        assert_eq!(s.apply(9.0), 2.0);
        assert_eq!(s.invert(2.0), 9.0);
    }

    #[test]
    fn population_statistics() {
        let (s, guarded) = ChannelStats::fit([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0].into_iter());
        assert!(!guarded);
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.std, 2.0);
    }

    #[test]
    fn constant_channel_is_guarded_and_reported() {
        let t = SignalTrain {
            t0: 0.0,
            window: [[1.0; WINDOW]; N_INPUTS],
            ic_state: [1.0; 3],
            ic_egr: 0.0,
            ic_vgt: 0.0,
            targets: [[3.0; WINDOW]; N_STATES],
        };
        let (stats, report) = NormStats::fit(&[t.clone(), t]).unwrap();
        assert_eq!(stats.inputs[0].std, STD_FLOOR);
        assert_eq!(report.guarded.len(), N_INPUTS + N_IC + N_STATES);
        assert!(report.guarded.contains(&"outputs[6]".to_string()));
        assert!(stats.all_finite());
    }

    #[test]
    fn empty_fit_rejected() {
        assert!(matches!(NormStats::fit(&[]), Err(DataError::EmptyTraining)));
    }

    proptest! {
        #[test]
        fn round_trip_identity(mean in -1e6f64..1e6, std in 1e-3f64..1e5, x in -1e7f64..1e7) {
            let s = ChannelStats { mean, std };
            let back = s.invert(s.apply(x));
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(mean.abs()).max(1.0));
        }
    }
}
