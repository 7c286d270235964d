use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, AdamState, Dense, Mlp, MlpGrads, NnError};

pub const FRAGMENT_VERSION: u32 = 1;

/// Serialized form of one network: layer dims, activation names, dropout
/// rates and row-major weights. Non-finite values serialize as `null` and are
/// rejected on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpFragment {
    pub format_version: u32,
    /// `[input, hidden.., output]`.
    pub dims: Vec<usize>,
    pub activations: Vec<String>,
    pub dropout: Vec<f64>,
    pub weights: Vec<Vec<Option<f64>>>,
    pub biases: Vec<Vec<Option<f64>>>,
    pub seed: u64,
}

/// Parameter-shaped buffers (Adam moments) in the same row-major layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferFragment {
    pub w: Vec<Vec<Option<f64>>>,
    pub b: Vec<Vec<Option<f64>>>,
}

fn encode(values: impl Iterator<Item = f64>) -> Vec<Option<f64>> {
    values.map(|v| v.is_finite().then_some(v)).collect()
}

fn decode(values: &[Option<f64>], layer: usize) -> Result<Vec<f64>, NnError> {
    values.iter().map(|v| v.filter(|x| x.is_finite()).ok_or(NnError::NonFinite { layer })).collect()
}

impl MlpFragment {
    pub fn from_mlp(net: &Mlp, seed: u64) -> Self {
        let mut dims = vec![net.input_dim()];
        dims.extend(net.layers.iter().map(|l| l.outputs()));
        Self {
            format_version: FRAGMENT_VERSION,
            dims,
            activations: net.layers.iter().map(|l| l.activation.name().to_string()).collect(),
            dropout: net.layers.iter().map(|l| l.dropout).collect(),
            weights: net.layers.iter().map(|l| encode(l.w.iter().copied())).collect(),
            biases: net.layers.iter().map(|l| encode(l.b.iter().copied())).collect(),
            seed,
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp, NnError> {
        if self.format_version != FRAGMENT_VERSION {
            return Err(NnError::Version { found: self.format_version, expected: FRAGMENT_VERSION });
        }
        let n = self.dims.len().saturating_sub(1);
        if n == 0
            || self.activations.len() != n
            || self.dropout.len() != n
            || self.weights.len() != n
            || self.biases.len() != n
        {
            return Err(NnError::Config("fragment layer lists disagree in length".into()));
        }
        let mut layers = Vec::with_capacity(n);
        for i in 0..n {
            let (fan_in, fan_out) = (self.dims[i], self.dims[i + 1]);
            let activation: Activation = self.activations[i].parse().map_err(NnError::UnknownActivation)?;
            let w = decode(&self.weights[i], i)?;
            let b = decode(&self.biases[i], i)?;
            if w.len() != fan_in * fan_out {
                return Err(NnError::Shape { layer: i, expected: fan_in * fan_out, found: w.len() });
            }
            if b.len() != fan_out {
                return Err(NnError::Shape { layer: i, expected: fan_out, found: b.len() });
            }
            layers.push(Dense {
                w: Array2::from_shape_vec((fan_out, fan_in), w).expect("length checked"),
                b: Array1::from_vec(b),
                activation,
                dropout: self.dropout[i],
            });
        }
        Mlp::from_layers(layers)
    }
}

impl BufferFragment {
    pub fn from_buffers(g: &MlpGrads) -> Self {
        Self {
            w: g.w.iter().map(|w| encode(w.iter().copied())).collect(),
            b: g.b.iter().map(|b| encode(b.iter().copied())).collect(),
        }
    }

    /// Rebuilds buffers shaped like `net`.
    pub fn to_buffers(&self, net: &Mlp) -> Result<MlpGrads, NnError> {
        if self.w.len() != net.layers.len() || self.b.len() != net.layers.len() {
            return Err(NnError::Config("buffer layer count does not match network".into()));
        }
        let mut out = MlpGrads::zeros_like(net);
        for (i, layer) in net.layers.iter().enumerate() {
            let w = decode(&self.w[i], i)?;
            let b = decode(&self.b[i], i)?;
            if w.len() != layer.w.len() || b.len() != layer.b.len() {
                return Err(NnError::Shape { layer: i, expected: layer.w.len(), found: w.len() });
            }
            out.w[i] = Array2::from_shape_vec(layer.w.raw_dim(), w).expect("length checked");
            out.b[i] = Array1::from_vec(b);
        }
        Ok(out)
    }
}

impl AdamState {
    pub fn to_fragments(&self) -> (BufferFragment, BufferFragment) {
        (BufferFragment::from_buffers(&self.m), BufferFragment::from_buffers(&self.v))
    }

    pub fn from_fragments(net: &Mlp, m: &BufferFragment, v: &BufferFragment, t: u64) -> Result<Self, NnError> {
        Ok(Self { m: m.to_buffers(net)?, v: v.to_buffers(net)?, t })
    }
}
