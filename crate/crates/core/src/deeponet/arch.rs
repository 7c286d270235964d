use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::nn::{Activation, MlpSpec};

pub const N_BRANCHES: usize = 9;
pub const N_TRUNKS: usize = 7;

/// Parameter count of the default architecture (q = 128, width 128).
pub const TABLE1_PARAMS: usize = 770_816;

/// Input width of each branch: four 10-point input windows, the three-value
/// state IC, the u_egr / u_vgt windows and the two scalar actuator ICs.
pub const BRANCH_INPUTS: [usize; N_BRANCHES] = [10, 10, 10, 10, 3, 10, 10, 1, 1];

/// Sizes and dropout rates of the nine branches and seven trunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchSpec {
    /// Embedding width shared by every branch and trunk output.
    pub q: usize,
    /// Hidden-layer width.
    pub width: usize,
    /// Dropout after each hidden activation, per branch.
    pub branch_dropout: [f64; N_BRANCHES],
}

impl Default for ArchSpec {
    fn default() -> Self {
        Self::table1(128, 128)
    }
}

impl ArchSpec {
    pub fn table1(q: usize, width: usize) -> Self {
        Self { q, width, branch_dropout: [0.20, 0.20, 0.10, 0.10, 0.0, 0.05, 0.05, 0.0, 0.0] }
    }

    /// Same layout with every dropout rate set to zero.
    pub fn without_dropout(mut self) -> Self {
        self.branch_dropout = [0.0; N_BRANCHES];
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.q == 0 || self.width == 0 {
            return Err(ModelError::Config("q and width must be positive".into()));
        }
        if let Some(r) = self.branch_dropout.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(ModelError::Config(format!("dropout rate {r} outside [0, 1)")));
        }
        Ok(())
    }

    pub fn branch_spec(&self, i: usize) -> MlpSpec {
        let (depth, output_activation) = match i {
            0..=3 => (3, Activation::Relu),
            4 | 7 | 8 => (3, Activation::Linear),
            5 | 6 => (2, Activation::Linear),
            _ => panic!("branch index {i} out of range"),
        };
        MlpSpec {
            input: BRANCH_INPUTS[i],
            hidden: vec![self.width; depth],
            output: self.q,
            hidden_activation: Activation::Swish,
            output_activation,
            dropout: self.branch_dropout[i],
        }
    }

    pub fn trunk_spec(&self) -> MlpSpec {
        MlpSpec {
            input: 1,
            hidden: vec![self.width; 3],
            output: self.q,
            hidden_activation: Activation::Swish,
            output_activation: Activation::Sigmoid,
            dropout: 0.0,
        }
    }

    pub fn param_count(&self) -> usize {
        (0..N_BRANCHES).map(|i| self.branch_spec(i).param_count()).sum::<usize>()
            + N_TRUNKS * self.trunk_spec().param_count()
    }
}
