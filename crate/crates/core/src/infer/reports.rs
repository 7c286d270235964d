use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{cumulative_error, predict, predict_mc, state_errors, truth, IcSource, InferError, PredictionEnsemble};
use crate::data::{SignalTrain, N_IC, N_STATES};
use crate::deeponet::DeepOnet;
use crate::engine::EngineOutputs;

/// One value per output state, serialized as an object keyed by state name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateErrors(pub [f64; N_STATES]);

impl StateErrors {
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / N_STATES as f64
    }
}

impl Serialize for StateErrors {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(N_STATES))?;
        for (name, v) in EngineOutputs::NAMES.iter().zip(self.0) {
            m.serialize_entry(name, &v)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for StateErrors {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = std::collections::BTreeMap::<String, f64>::deserialize(d)?;
        let mut out = [0.0; N_STATES];
        for (k, name) in EngineOutputs::NAMES.iter().enumerate() {
            out[k] = *map.get(*name).ok_or_else(|| serde::de::Error::custom(format!("missing state {name}")))?;
        }
        Ok(Self(out))
    }
}

/// Recorded vs chained initial conditions over the same trains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seq2SeqReport {
    pub ground_truth: StateErrors,
    pub chained: StateErrors,
    /// Accumulated error curves `[state][point]`.
    #[serde(skip)]
    pub cumulative_ground_truth: Vec<Vec<f64>>,
    #[serde(skip)]
    pub cumulative_chained: Vec<Vec<f64>>,
}

pub fn seq2seq_report(
    model: &DeepOnet,
    test: &[SignalTrain],
    initial: [f64; N_IC],
) -> Result<Seq2SeqReport, InferError> {
    let clean = truth(test);
    let gt = predict(model, test, IcSource::GroundTruth)?;
    let ch = predict(model, test, IcSource::Chained { initial })?;
    let curves = |p: &Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>, InferError> {
        (0..N_STATES).map(|s| Ok(cumulative_error(&p[s], &clean[s])?)).collect()
    };
    Ok(Seq2SeqReport {
        ground_truth: StateErrors(state_errors(&gt.values, &clean)?),
        chained: StateErrors(state_errors(&ch.values, &clean)?),
        cumulative_ground_truth: curves(&gt.values)?,
        cumulative_chained: curves(&ch.values)?,
    })
}

/// Deterministic vs MC-dropout ensemble errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub n_mc: usize,
    pub seed: u64,
    pub deterministic: StateErrors,
    pub ensemble_mean: StateErrors,
    /// Error of the `μ + 2σ` trace.
    pub upper_band: StateErrors,
    /// Error of the `μ − 2σ` trace.
    pub lower_band: StateErrors,
}

pub fn uncertainty_report(
    model: &DeepOnet,
    test: &[SignalTrain],
    n_mc: usize,
    seed: u64,
) -> Result<(UncertaintyReport, PredictionEnsemble), InferError> {
    let clean = truth(test);
    let det = predict(model, test, IcSource::GroundTruth)?;
    let ens = predict_mc(model, test, IcSource::GroundTruth, n_mc, seed)?;
    let report = UncertaintyReport {
        n_mc,
        seed,
        deterministic: StateErrors(state_errors(&det.values, &clean)?),
        ensemble_mean: StateErrors(state_errors(&ens.mean, &clean)?),
        upper_band: StateErrors(state_errors(&ens.band_high(), &clean)?),
        lower_band: StateErrors(state_errors(&ens.band_low(), &clean)?),
    };
    Ok((report, ens))
}

/// Clean-label vs noisy-label training, both scored on clean test data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelNoiseReport {
    pub level_pct: f64,
    pub clean_labels: StateErrors,
    pub noisy_labels: StateErrors,
}
