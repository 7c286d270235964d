use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::data::{N_STATES, WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean squared error with self-adaptive point weights `λ²`.
    #[default]
    L2Sa,
    L2,
    L1,
}

pub const SA_RATE: f64 = 1e-4;
pub const SA_CLIP: (f64, f64) = (1e-3, 1e3);

/// Trainable weight per (state, point); the loss uses `λ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaWeights {
    pub lambda: [[f64; WINDOW]; N_STATES],
    pub rate: f64,
}

impl Default for SaWeights {
    fn default() -> Self {
        Self::new(SA_RATE)
    }
}

impl SaWeights {
    pub fn new(rate: f64) -> Self {
        Self { lambda: [[1.0; WINDOW]; N_STATES], rate }
    }

    /// Gradient ascent on the loss: `λ ← λ + η·2λ·r̄`, clipped.
    pub fn update(&mut self, residuals: &[[f64; WINDOW]; N_STATES]) {
        for s in 0..N_STATES {
            for j in 0..WINDOW {
                let l = self.lambda[s][j];
                self.lambda[s][j] = (l + self.rate * 2.0 * l * residuals[s][j]).clamp(SA_CLIP.0, SA_CLIP.1);
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.lambda.iter().flatten().all(|v| v.is_finite())
    }
}

/// Loss value, `dL/dpred` and the batch-mean squared error per (state, point).
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: Array3<f64>,
    pub residuals: [[f64; WINDOW]; N_STATES],
}

/// `L = 1/(N·7·10) Σ w[s][j]·(pred − target)²` with `w = λ²` for
/// [`LossKind::L2Sa`] and `w = 1` for [`LossKind::L2`]; the L1 variant uses
/// `|pred − target|`.
pub fn loss(pred: &Array3<f64>, target: &Array3<f64>, sa: &SaWeights, kind: LossKind) -> LossOutput {
    assert_eq!(pred.dim(), target.dim(), "prediction and target shapes differ");
    let n = pred.dim().0;
    let scale = 1.0 / (n * N_STATES * WINDOW) as f64;
    let mut grad = Array3::zeros(pred.dim());
    let mut residuals = [[0.0; WINDOW]; N_STATES];
    let mut total = 0.0;
    for i in 0..n {
        for s in 0..N_STATES {
            for j in 0..WINDOW {
                let r = pred[[i, s, j]] - target[[i, s, j]];
                residuals[s][j] += r * r;
                let (term, d) = match kind {
                    LossKind::L2Sa => {
                        let m = sa.lambda[s][j] * sa.lambda[s][j];
                        (m * r * r, 2.0 * m * r)
                    }
                    LossKind::L2 => (r * r, 2.0 * r),
                    LossKind::L1 => (
                        r.abs(),
                        if r > 0.0 {
                            1.0
                        } else if r < 0.0 {
                            -1.0
                        } else {
                            0.0
                        },
                    ),
                };
                total += term;
                grad[[i, s, j]] = d * scale;
            }
        }
    }
    for row in &mut residuals {
        for v in row {
            *v /= n.max(1) as f64;
        }
    }
    LossOutput { loss: total * scale, grad, residuals }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(f: impl Fn(usize, usize, usize) -> f64) -> Array3<f64> {
        Array3::from_shape_fn((3, N_STATES, WINDOW), |(i, s, j)| f(i, s, j))
    }

    #[test]
    fn exact_prediction_is_zero() {
        let t = arr(|i, s, j| (i + s * j) as f64);
        for kind in [LossKind::L2Sa, LossKind::L2, LossKind::L1] {
            assert_eq!(loss(&t, &t, &SaWeights::default(), kind).loss, 0.0);
        }
    }

    #[test]
    fn unit_lambda_is_mse() {
        let p = arr(|i, s, j| (i * 3 + s + j) as f64 * 0.1);
        let t = arr(|i, s, j| ((i + s * j) % 4) as f64);
        let mse = (&p - &t).mapv(|r| r * r).mean().unwrap();
        let a = loss(&p, &t, &SaWeights::default(), LossKind::L2Sa).loss;
        let b = loss(&p, &t, &SaWeights::default(), LossKind::L2).loss;
        assert!((a - mse).abs() < 1e-14 && (b - mse).abs() < 1e-14);
    }

    #[test]
    fn doubling_lambda_quadruples_term() {
        let t = Array3::zeros((1, N_STATES, WINDOW));
        let mut p = t.clone();
        p[[0, 2, 4]] = 1.5;
        let mut sa = SaWeights::default();
        let base = loss(&p, &t, &sa, LossKind::L2Sa).loss;
        sa.lambda[2][4] = 2.0;
        let doubled = loss(&p, &t, &sa, LossKind::L2Sa).loss;
        assert!((doubled - 4.0 * base).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_differences() {
        let p = arr(|i, s, j| (i as f64 - s as f64 * 0.3 + j as f64 * 0.07).sin());
        let t = arr(|i, s, j| ((i + s + j) as f64 * 0.4).cos());
        let mut sa = SaWeights::default();
        sa.lambda[1][3] = 1.7;
        for kind in [LossKind::L2Sa, LossKind::L2, LossKind::L1] {
            let out = loss(&p, &t, &sa, kind);
            let h = 1e-7;
            for idx in [(0, 1, 3), (2, 6, 9), (1, 0, 0)] {
                let mut up = p.clone();
                up[idx] += h;
                let mut down = p.clone();
                down[idx] -= h;
                let fd = (loss(&up, &t, &sa, kind).loss - loss(&down, &t, &sa, kind).loss) / (2.0 * h);
                assert!((fd - out.grad[idx]).abs() < 1e-8, "{kind:?} {idx:?}");
            }
        }
    }

    #[test]
    fn sa_update_rules() {
        let mut sa = SaWeights::default();
        let mut r = [[0.0; WINDOW]; N_STATES];
        sa.update(&r);
        assert_eq!(sa, SaWeights::default());
        r[0][0] = 2.0;
        r[0][1] = 1.0;
        sa.update(&r);
        assert!(sa.lambda[0][0] - 1.0 > sa.lambda[0][1] - 1.0);
        assert!(sa.lambda[0][1] > 1.0);
        sa.lambda[3][3] = SA_CLIP.1;
        r[3][3] = 5.0;
        sa.update(&r);
        assert_eq!(sa.lambda[3][3], SA_CLIP.1);
    }

    #[test]
    fn residuals_are_batch_means() {
        let t = Array3::zeros((2, N_STATES, WINDOW));
        let mut p = t.clone();
        p[[0, 4, 2]] = 2.0;
        let out = loss(&p, &t, &SaWeights::default(), LossKind::L2);
        assert_eq!(out.residuals[4][2], 2.0);
    }
}
