use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, NnError};

/// How dropout behaves during a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout disabled.
    Eval,
    /// Inverted dropout, recorded on the tape for training.
    Train,
    /// Inverted dropout at inference (Monte Carlo sampling).
    Mc,
}

impl Mode {
    pub fn stochastic(self) -> bool {
        !matches!(self, Mode::Eval)
    }
}

/// Layer sizes and activations of a feed-forward network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Dropout rate applied after every hidden activation.
    pub dropout: f64,
}

impl MlpSpec {
    pub fn param_count(&self) -> usize {
        let mut dims = vec![self.input];
        dims.extend(&self.hidden);
        dims.push(self.output);
        dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[out × in]`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
    /// Dropout rate applied to this layer's activated output.
    pub dropout: f64,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.w.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    version: u64,
}

/// Intermediate values recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    version: u64,
    /// Input fed to each layer (after the previous layer's dropout).
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
}

/// Parameter-shaped buffers (gradients, optimizer moments).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub w: Vec<Array2<f64>>,
    pub b: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            w: net.layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            b: net.layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().flat_map(|w| w.iter()).chain(self.b.iter().flat_map(|b| b.iter()))
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

fn dropout_mask<R: Rng + ?Sized>(rows: usize, cols: usize, rate: f64, rng: &mut R) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn((rows, cols), || if rng.gen::<f64>() < rate { 0.0 } else { keep })
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> Result<Self, NnError> {
        if !(0.0..1.0).contains(&spec.dropout) {
            return Err(NnError::Config(format!("dropout rate {} outside [0, 1)", spec.dropout)));
        }
        let mut dims = vec![spec.input];
        dims.extend(&spec.hidden);
        dims.push(spec.output);
        if dims.iter().any(|&d| d == 0) {
            return Err(NnError::Config("layer widths must be positive".into()));
        }
        let n = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.gen_range(-limit..limit));
                let last = i + 1 == n;
                Dense {
                    w,
                    b: Array1::zeros(fan_out),
                    activation: if last { spec.output_activation } else { spec.hidden_activation },
                    dropout: if last { 0.0 } else { spec.dropout },
                }
            })
            .collect();
        Ok(Self { layers, version: 0 })
    }

    /// Builds a network from explicit layers, checking that dimensions chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Config("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.b.len() != l.outputs() {
                return Err(NnError::Shape { layer: i, expected: l.outputs(), found: l.b.len() });
            }
            if i > 0 && layers[i - 1].outputs() != l.inputs() {
                return Err(NnError::Shape { layer: i, expected: layers[i - 1].outputs(), found: l.inputs() });
            }
            if !(0.0..1.0).contains(&l.dropout) {
                return Err(NnError::Config(format!("layer {i}: dropout rate {} outside [0, 1)", l.dropout)));
            }
            if l.w.iter().chain(l.b.iter()).any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite { layer: i });
            }
        }
        Ok(Self { layers, version: 0 })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(Dense::outputs).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn has_dropout(&self) -> bool {
        self.layers.iter().any(|l| l.dropout > 0.0)
    }

    /// Marks parameters as changed; tapes recorded earlier become stale.
    pub fn bump_version(&mut self) {
        self.version += 1;
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<(), NnError> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::Shape { layer: 0, expected: self.input_dim(), found: x.ncols() });
        }
        Ok(())
    }

    /// Forward pass that records a tape for [`Mlp::backward`]. Masks are drawn
    /// from `rng` only in the stochastic modes and only for layers with a
    /// nonzero rate.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: &Array2<f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Array2<f64>, Tape), NnError> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut tape = Tape {
            version: self.version,
            inputs: Vec::with_capacity(n),
            pre_activations: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
        };
        let mut a = x.clone();
        for layer in &self.layers {
            let z = a.dot(&layer.w.t()) + &layer.b;
            let mut out = layer.activation.apply(&z);
            let mask = if mode.stochastic() && layer.dropout > 0.0 {
                let m = dropout_mask(out.nrows(), out.ncols(), layer.dropout, rng);
                out *= &m;
                Some(m)
            } else {
                None
            };
            tape.inputs.push(a);
            tape.pre_activations.push(z);
            tape.masks.push(mask);
            a = out;
        }
        Ok((a, tape))
    }

    /// Forward pass without a tape.
    pub fn predict<R: Rng + ?Sized>(&self, x: &Array2<f64>, mode: Mode, rng: &mut R) -> Result<Array2<f64>, NnError> {
        self.check_input(x)?;
        let mut a = x.to_owned();
        for layer in &self.layers {
            let z = a.dot(&layer.w.t()) + &layer.b;
            a = layer.activation.apply(&z);
            if mode.stochastic() && layer.dropout > 0.0 {
                a *= &dropout_mask(a.nrows(), a.ncols(), layer.dropout, rng);
            }
        }
        Ok(a)
    }

    /// Reverse-mode gradients of a scalar loss given `dL/dy`. Returns the
    /// parameter gradients and `dL/dx`.
    pub fn backward(&self, tape: &Tape, dy: &Array2<f64>) -> Result<(MlpGrads, Array2<f64>), NnError> {
        if tape.version != self.version || tape.inputs.len() != self.layers.len() {
            return Err(NnError::StaleTape { tape: tape.version, net: self.version });
        }
        let last = self.layers.len() - 1;
        let expected = tape.pre_activations[last].raw_dim();
        if dy.raw_dim() != expected {
            return Err(NnError::Shape { layer: last, expected: expected[1], found: dy.ncols() });
        }
        let mut gw = Vec::with_capacity(self.layers.len());
        let mut gb = Vec::with_capacity(self.layers.len());
        let mut g = dy.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if let Some(mask) = &tape.masks[i] {
                g *= mask;
            }
            layer.activation.backprop_in_place(&tape.pre_activations[i], &mut g);
            gw.push(g.t().dot(&tape.inputs[i]).as_standard_layout().into_owned());
            gb.push(g.sum_axis(Axis(0)));
            g = g.dot(&layer.w);
        }
        gw.reverse();
        gb.reverse();
        Ok((MlpGrads { w: gw, b: gb }, g))
    }
}
