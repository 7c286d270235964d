use thiserror::Error;

use crate::data::N_STATES;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("prediction has {pred} points, truth has {truth}")]
    Length { pred: usize, truth: usize },
    #[error("relative error undefined: truth is identically zero")]
    ZeroTruth,
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// `100 · ‖pred − truth‖₂ / ‖truth‖₂`.
pub fn relative_l2_error(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::Length { pred: pred.len(), truth: truth.len() });
    }
    let denom = norm(truth.iter().copied());
    if denom == 0.0 {
        return Err(MetricError::ZeroTruth);
    }
    Ok(100.0 * norm(pred.iter().zip(truth).map(|(p, t)| p - t)) / denom)
}

/// Relative L2 error per state.
pub fn state_errors(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<[f64; N_STATES], MetricError> {
    let mut out = [0.0; N_STATES];
    for s in 0..N_STATES {
        out[s] = relative_l2_error(&pred[s], &truth[s])?;
    }
    Ok(out)
}

/// Accumulated error up to each point, `100 · sqrt(Σ_{i≤k} (p−t)²) / ‖truth‖₂`.
/// The last entry equals [`relative_l2_error`].
pub fn cumulative_error(pred: &[f64], truth: &[f64]) -> Result<Vec<f64>, MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::Length { pred: pred.len(), truth: truth.len() });
    }
    let denom = norm(truth.iter().copied());
    if denom == 0.0 {
        return Err(MetricError::ZeroTruth);
    }
    let mut acc = 0.0;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            acc += (p - t) * (p - t);
            100.0 * acc.sqrt() / denom
        })
        .collect())
}
