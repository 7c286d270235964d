use ndarray::Array3;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{loss, BranchInputs, DeepOnet, LossKind, ModelError, SaWeights};
use crate::nn::Mode;

/// Gradients smaller than this are compared in absolute terms.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheck {
    /// `|a − n| / max(|a|, |n|, floor)`.
    pub fn rel_error(&self) -> f64 {
        let denom = self.analytic.abs().max(self.numeric.abs()).max(GRADCHECK_FLOOR);
        (self.analytic - self.numeric).abs() / denom
    }
}

/// Compares the back-propagated gradient of the training loss with central
/// differences (step `h`) at `n_params` parameters drawn with `pick_seed`.
/// Dropout masks are frozen by reusing `mask_seed` for every pass.
pub fn gradient_check(
    model: &mut DeepOnet,
    inputs: &BranchInputs,
    target: &Array3<f64>,
    mask_seed: u64,
    n_params: usize,
    pick_seed: u64,
    h: f64,
) -> Result<Vec<GradCheck>, ModelError> {
    let sa = SaWeights::new(0.0);
    let (pred, tape) = model.forward(inputs, Mode::Train, mask_seed)?;
    let out = loss(&pred, target, &sa, LossKind::L2Sa);
    let grads = model.backward(&tape, &out.grad)?.flat();
    let mut rng = ChaCha8Rng::seed_from_u64(pick_seed);
    let mut picked = sample(&mut rng, grads.len(), n_params.min(grads.len())).into_vec();
    picked.sort_unstable();
    let eval = |m: &DeepOnet| -> Result<f64, ModelError> {
        Ok(loss(&m.predict(inputs, Mode::Train, mask_seed)?, target, &sa, LossKind::L2Sa).loss)
    };
    let mut checks = Vec::with_capacity(picked.len());
    for index in picked {
        let orig = *model.param_mut(index);
        *model.param_mut(index) = orig + h;
        let up = eval(model)?;
        *model.param_mut(index) = orig - h;
        let down = eval(model)?;
        *model.param_mut(index) = orig;
        checks.push(GradCheck { index, analytic: grads[index], numeric: (up - down) / (2.0 * h) });
    }
    Ok(checks)
}
