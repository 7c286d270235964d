use serde::{Deserialize, Serialize};

use super::{Mlp, MlpGrads, NnError};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam update of a flat parameter slice at (1-based) step `t`.
pub fn adam_update(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], t: u64, lr: f64) {
    debug_assert!(params.len() == grads.len() && m.len() == grads.len() && v.len() == grads.len());
    let bc1 = 1.0 - BETA1.powi(t as i32);
    let bc2 = 1.0 - BETA2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

/// First and second moments for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: MlpGrads,
    pub v: MlpGrads,
    pub t: u64,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        Self { m: MlpGrads::zeros_like(net), v: MlpGrads::zeros_like(net), t: 0 }
    }

    fn shapes_match(&self, net: &Mlp, grads: &MlpGrads) -> bool {
        let same = |a: &MlpGrads| {
            a.w.len() == net.layers.len()
                && a.b.len() == net.layers.len()
                && a.w.iter().zip(&net.layers).all(|(w, l)| w.raw_dim() == l.w.raw_dim())
                && a.b.iter().zip(&net.layers).all(|(b, l)| b.raw_dim() == l.b.raw_dim())
        };
        same(&self.m) && same(&self.v) && same(grads)
    }

    /// Applies one Adam step to `net`. Non-finite gradients abort the step
    /// before anything is modified.
    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads, lr: f64) -> Result<(), NnError> {
        if !self.shapes_match(net, grads) {
            return Err(NnError::Config("optimizer state does not match network shape".into()));
        }
        if !grads.all_finite() {
            return Err(NnError::NonFiniteGradient);
        }
        self.t += 1;
        for (i, layer) in net.layers.iter_mut().enumerate() {
            adam_update(
                layer.w.as_slice_mut().expect("standard layout"),
                grads.w[i].as_slice().expect("standard layout"),
                self.m.w[i].as_slice_mut().expect("standard layout"),
                self.v.w[i].as_slice_mut().expect("standard layout"),
                self.t,
                lr,
            );
            adam_update(
                layer.b.as_slice_mut().expect("standard layout"),
                grads.b[i].as_slice().expect("standard layout"),
                self.m.b[i].as_slice_mut().expect("standard layout"),
                self.v.b[i].as_slice_mut().expect("standard layout"),
                self.t,
                lr,
            );
        }
        net.bump_version();
        Ok(())
    }
}

/// Piecewise-constant learning rate indexed by epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSchedule {
    /// Epochs at which the next rate takes over; strictly increasing.
    pub boundaries: Vec<usize>,
    /// One more entry than `boundaries`; positive and non-increasing.
    pub rates: Vec<f64>,
    pub terminal_epoch: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self { boundaries: vec![5_000, 10_000], rates: vec![1e-3, 5e-4, 1e-4], terminal_epoch: 20_000 }
    }
}

impl LrSchedule {
    /// The default schedule with its boundaries moved to the same fractions
    /// (1/4, 1/2) of a shorter budget.
    pub fn scaled_to(epochs: usize) -> Self {
        let d = Self::default();
        let mut boundaries: Vec<usize> = d.boundaries.iter().map(|&b| b * epochs / d.terminal_epoch).collect();
        for i in 1..boundaries.len() {
            boundaries[i] = boundaries[i].max(boundaries[i - 1] + 1);
        }
        Self { boundaries, rates: d.rates, terminal_epoch: epochs }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.rates.len() != self.boundaries.len() + 1 {
            return Err(NnError::Config("schedule needs one more rate than boundaries".into()));
        }
        if self.rates.iter().any(|&r| !(r > 0.0)) || self.rates.windows(2).any(|w| w[1] > w[0]) {
            return Err(NnError::Config("rates must be positive and non-increasing".into()));
        }
        if self.boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NnError::Config("boundaries must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn rate(&self, epoch: usize) -> f64 {
        let idx = self.boundaries.iter().take_while(|&&b| epoch >= b).count();
        self.rates[idx]
    }
}
