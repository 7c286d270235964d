use super::{predict_with, IcSource, InferError, Prediction, WindowPredictor};
use crate::data::{SignalTrain, N_STATES};
use crate::nn::Mode;
use crate::util::mix_seed;

/// MC-dropout samples and their per-point statistics, physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionEnsemble {
    pub t: Vec<f64>,
    /// `samples[k][state][point]`.
    pub samples: Vec<Vec<Vec<f64>>>,
    pub mean: Vec<Vec<f64>>,
    /// Sample standard deviation (n − 1 denominator).
    pub std: Vec<Vec<f64>>,
}

impl PredictionEnsemble {
    pub fn from_samples(t: Vec<f64>, samples: Vec<Vec<Vec<f64>>>) -> Result<Self, InferError> {
        let n = samples.len();
        if n < 2 {
            return Err(InferError::Config(format!("an ensemble needs at least 2 samples, got {n}")));
        }
        let len = t.len();
        let mut mean = vec![vec![0.0; len]; N_STATES];
        let mut std = vec![vec![0.0; len]; N_STATES];
        for s in 0..N_STATES {
            for j in 0..len {
                // Shifted by the first sample: identical samples give σ = 0 exactly.
                let x0 = samples[0][s][j];
                let (sum, sq) = samples.iter().fold((0.0, 0.0), |(a, b), k| {
                    let d = k[s][j] - x0;
                    (a + d, b + d * d)
                });
                mean[s][j] = x0 + sum / n as f64;
                std[s][j] = ((sq - sum * sum / n as f64) / (n - 1) as f64).max(0.0).sqrt();
            }
        }
        Ok(Self { t, samples, mean, std })
    }

    /// `μ + k·σ` per state.
    pub fn band(&self, k: f64) -> Vec<Vec<f64>> {
        self.mean.iter().zip(&self.std).map(|(m, s)| m.iter().zip(s).map(|(m, s)| m + k * s).collect()).collect()
    }

    pub fn band_low(&self) -> Vec<Vec<f64>> {
        self.band(-2.0)
    }

    pub fn band_high(&self) -> Vec<Vec<f64>> {
        self.band(2.0)
    }
}

/// `n_mc` stochastic passes with dropout active, each with its own mask
/// stream derived from `seed`.
pub fn predict_mc<P: WindowPredictor + ?Sized>(
    model: &P,
    trains: &[SignalTrain],
    source: IcSource,
    n_mc: usize,
    seed: u64,
) -> Result<PredictionEnsemble, InferError> {
    if n_mc < 2 {
        return Err(InferError::Config(format!("n_mc must be at least 2, got {n_mc}")));
    }
    let mut t = vec![];
    let mut samples = Vec::with_capacity(n_mc);
    for k in 0..n_mc {
        let Prediction { t: tk, values, .. } = predict_with(model, trains, source, Mode::Mc, mix_seed(seed, k as u64))?;
        t = tk;
        samples.push(values);
    }
    PredictionEnsemble::from_samples(t, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ChannelStats;
    use crate::data::NormStats;
    use crate::deeponet::{ArchSpec, DeepOnet};
    use crate::infer::tests::{contiguous, Oracle};

    fn model(arch: ArchSpec) -> DeepOnet {
        let c = ChannelStats { mean: 1.0, std: 2.0 };
        DeepOnet::new(arch, NormStats { inputs: [c; 4], ic: [c; 5], outputs: [c; 7] }, 8).unwrap()
    }

    #[test]
    fn no_dropout_collapses_band() {
        let m = model(ArchSpec::table1(8, 8).without_dropout());
        let e = predict_mc(&m, &contiguous(3), IcSource::GroundTruth, 5, 1).unwrap();
        assert!(e.std.iter().flatten().all(|&s| s == 0.0));
        assert_eq!(e.band_high(), e.mean);
        assert!(e.samples.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn same_seed_same_ensemble() {
        let m = model(ArchSpec::table1(8, 8));
        let a = predict_mc(&m, &contiguous(3), IcSource::GroundTruth, 6, 4).unwrap();
        let b = predict_mc(&m, &contiguous(3), IcSource::GroundTruth, 6, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.std.iter().flatten().any(|&s| s > 0.0));
        let c = predict_mc(&m, &contiguous(3), IcSource::GroundTruth, 6, 5).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn statistics_and_band_order() {
        let m = model(ArchSpec::table1(8, 8));
        let e = predict_mc(&m, &contiguous(2), IcSource::GroundTruth, 10, 2).unwrap();
        let (lo, hi) = (e.band_low(), e.band_high());
        for s in 0..N_STATES {
            for j in 0..e.t.len() {
                let direct = e.samples.iter().map(|k| k[s][j]).sum::<f64>() / 10.0;
                assert!((direct - e.mean[s][j]).abs() <= 1e-12 * direct.abs().max(1.0));
                assert!(lo[s][j] <= e.mean[s][j] && e.mean[s][j] <= hi[s][j]);
            }
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(predict_mc(&Oracle, &contiguous(2), IcSource::GroundTruth, 1, 0), Err(InferError::Config(_))));
    }

    #[test]
    fn bessel_correction() {
        let t = vec![0.0];
        let samples = vec![vec![vec![1.0]; N_STATES], vec![vec![3.0]; N_STATES]];
        let e = PredictionEnsemble::from_samples(t, samples).unwrap();
        assert_eq!(e.mean[0][0], 2.0);
        assert!((e.std[0][0] - 2f64.sqrt()).abs() < 1e-15);
    }
}
