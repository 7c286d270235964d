//! Prediction over test spans: recorded or chained initial conditions,
//! MC-dropout ensembles, noisy-input sweeps and error metrics.

mod mc;
mod metrics;
mod noisy;
mod reports;

pub use mc::{predict_mc, PredictionEnsemble};
pub use metrics::{cumulative_error, relative_l2_error, state_errors, MetricError};
pub use noisy::{evaluate_noisy, NoiseRow, NoiseTable};
pub use reports::{
    seq2seq_report, uncertainty_report, LabelNoiseReport, Seq2SeqReport, StateErrors, UncertaintyReport,
};

use ndarray::Array3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, SignalTrain, IC_STATES, N_IC, N_STATES, WINDOW};
use crate::deeponet::{BranchInputs, DeepOnet, ModelError};
use crate::nn::Mode;

#[derive(Debug, Error)]
pub enum InferError {
    #[error("trains are not contiguous: train {index} starts at {found} s, expected {expected} s")]
    ChainGap { index: usize, expected: f64, found: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Anything that maps trains plus physical initial conditions to physical
/// predictions `(N, 7, 10)`.
pub trait WindowPredictor {
    fn predict_windows(
        &self,
        trains: &[SignalTrain],
        ics: &[[f64; N_IC]],
        mode: Mode,
        seed: u64,
    ) -> Result<Array3<f64>, InferError>;
}

impl WindowPredictor for DeepOnet {
    fn predict_windows(
        &self,
        trains: &[SignalTrain],
        ics: &[[f64; N_IC]],
        mode: Mode,
        seed: u64,
    ) -> Result<Array3<f64>, InferError> {
        let x = BranchInputs::with_ics(trains, ics, &self.norm);
        Ok(self.denormalize(&self.predict(&x, mode, seed)?))
    }
}

/// Where each train's initial conditions come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcSource {
    /// The values recorded in each train.
    GroundTruth,
    /// `initial` for the first train, then the prediction at the previous
    /// train's last point.
    Chained { initial: [f64; N_IC] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GroundTruth,
    Predicted,
}

/// Concatenated predictions over a run of trains, in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Time of every point.
    pub t: Vec<f64>,
    /// `values[state][point]`.
    pub values: Vec<Vec<f64>>,
    /// Initial conditions actually fed to each train.
    pub ics: Vec<[f64; N_IC]>,
    pub provenance: Vec<Provenance>,
}

impl Prediction {
    fn from_tensor(
        trains: &[SignalTrain],
        pred: &Array3<f64>,
        ics: Vec<[f64; N_IC]>,
        provenance: Vec<Provenance>,
    ) -> Self {
        let t = time_axis(trains);
        let values = (0..N_STATES).map(|s| pred.outer_iter().flat_map(|p| p.row(s).to_vec()).collect()).collect();
        Self { t, values, ics, provenance }
    }
}

/// Point times of concatenated trains.
pub fn time_axis(trains: &[SignalTrain]) -> Vec<f64> {
    trains.iter().flat_map(|t| (0..WINDOW).map(move |j| t.t0 + j as f64 * crate::data::SAMPLE_PERIOD)).collect()
}

/// Concatenated targets `[state][point]`.
pub fn truth(trains: &[SignalTrain]) -> Vec<Vec<f64>> {
    (0..N_STATES).map(|s| trains.iter().flat_map(|t| t.targets[s]).collect()).collect()
}

pub fn check_contiguous(trains: &[SignalTrain]) -> Result<(), InferError> {
    for (i, w) in trains.windows(2).enumerate() {
        let expected = w[0].t_end();
        if (w[1].t0 - expected).abs() > 1e-9 {
            return Err(InferError::ChainGap { index: i + 1, expected, found: w[1].t0 });
        }
    }
    Ok(())
}

/// Runs the model over `trains`. Ground-truth ICs use one batched pass;
/// chained ICs run one pass per train, in order.
pub fn predict_with<P: WindowPredictor + ?Sized>(
    model: &P,
    trains: &[SignalTrain],
    source: IcSource,
    mode: Mode,
    seed: u64,
) -> Result<Prediction, InferError> {
    if trains.is_empty() {
        return Err(InferError::Config("no trains to predict".into()));
    }
    match source {
        IcSource::GroundTruth => {
            let ics: Vec<_> = trains.iter().map(SignalTrain::ic).collect();
            let pred = model.predict_windows(trains, &ics, mode, seed)?;
            Ok(Prediction::from_tensor(trains, &pred, ics, vec![Provenance::GroundTruth; trains.len()]))
        }
        IcSource::Chained { initial } => {
            check_contiguous(trains)?;
            let mut ic = initial;
            let mut ics = Vec::with_capacity(trains.len());
            let mut out = Array3::zeros((trains.len(), N_STATES, WINDOW));
            for (i, t) in trains.iter().enumerate() {
                let p = model.predict_windows(
                    std::slice::from_ref(t),
                    &[ic],
                    mode,
                    crate::util::mix_seed(seed, i as u64),
                )?;
                out.index_axis_mut(ndarray::Axis(0), i).assign(&p.index_axis(ndarray::Axis(0), 0));
                ics.push(ic);
                ic = IC_STATES.map(|s| p[[0, s, WINDOW - 1]]);
                if ic.iter().any(|v| !v.is_finite()) {
                    return Err(InferError::Config(format!("non-finite chained state after train {i}")));
                }
            }
            let mut prov = vec![Provenance::Predicted; trains.len()];
            prov[0] = Provenance::GroundTruth;
            Ok(Prediction::from_tensor(trains, &out, ics, prov))
        }
    }
}

/// Deterministic (eval-mode) prediction.
pub fn predict<P: WindowPredictor + ?Sized>(
    model: &P,
    trains: &[SignalTrain],
    source: IcSource,
) -> Result<Prediction, InferError> {
    predict_with(model, trains, source, Mode::Eval, 0)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Returns each train's own targets, whatever the ICs.
    pub struct Oracle;

    impl WindowPredictor for Oracle {
        fn predict_windows(
            &self,
            trains: &[SignalTrain],
            _: &[[f64; N_IC]],
            _: Mode,
            _: u64,
        ) -> Result<Array3<f64>, InferError> {
            Ok(Array3::from_shape_fn((trains.len(), N_STATES, WINDOW), |(i, s, j)| trains[i].targets[s][j]))
        }
    }

    /// Adds the IC's first entry to every prediction, so chaining errors grow.
    pub struct Drifting;

    impl WindowPredictor for Drifting {
        fn predict_windows(
            &self,
            trains: &[SignalTrain],
            ics: &[[f64; N_IC]],
            _: Mode,
            _: u64,
        ) -> Result<Array3<f64>, InferError> {
            Ok(Array3::from_shape_fn((trains.len(), N_STATES, WINDOW), |(i, s, j)| {
                trains[i].targets[s][j] + 0.01 * ics[i][0]
            }))
        }
    }

    pub fn contiguous(n: usize) -> Vec<SignalTrain> {
        (0..n)
            .map(|i| {
                let mut t = SignalTrain {
                    t0: 100.0 + 5.0 * i as f64,
                    window: std::array::from_fn(|c| {
                        std::array::from_fn(|j| 1.0 + 0.3 * c as f64 + 0.1 * j as f64 + 0.05 * i as f64)
                    }),
                    ic_state: [0.0; 3],
                    ic_egr: 0.0,
                    ic_vgt: 0.0,
                    targets: std::array::from_fn(|s| std::array::from_fn(|j| 1.0 + (s + j + i) as f64)),
                };
                t.refresh_ic_from_targets();
                t
            })
            .collect()
    }

    #[test]
    fn oracle_chaining_matches_ground_truth() {
        let trains = contiguous(6);
        let gt = predict(&Oracle, &trains, IcSource::GroundTruth).unwrap();
        let initial = trains[0].ic();
        let ch = predict(&Oracle, &trains, IcSource::Chained { initial }).unwrap();
        assert_eq!(gt.values, ch.values);
        assert_eq!(gt.values, truth(&trains));
        assert_eq!(ch.provenance[1], Provenance::Predicted);
    }

    #[test]
    fn chained_ic_is_previous_last_point() {
        let trains = contiguous(5);
        let p = predict(&Drifting, &trains, IcSource::Chained { initial: [3.0; 5] }).unwrap();
        for t in 1..5 {
            let last = t * WINDOW - 1;
            let expected = IC_STATES.map(|s| p.values[s][last]);
            assert_eq!(p.ics[t], expected);
        }
    }

    #[test]
    fn gap_is_reported() {
        let mut trains = contiguous(4);
        trains[2].t0 += 5.0;
        trains[3].t0 += 5.0;
        match predict(&Oracle, &trains, IcSource::Chained { initial: [0.0; 5] }) {
            Err(InferError::ChainGap { index, expected, found }) => {
                assert_eq!(index, 2);
                assert_eq!(expected, 110.0);
                assert_eq!(found, 115.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(predict(&Oracle, &trains, IcSource::GroundTruth).is_ok());
    }

    #[test]
    fn time_axis_spacing() {
        let t = time_axis(&contiguous(2));
        assert_eq!(t.len(), 20);
        assert_eq!(t[0], 100.0);
        assert_eq!(t[19], 109.5);
    }
}
