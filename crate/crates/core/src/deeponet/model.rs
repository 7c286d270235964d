use ndarray::{s, Array2, Array3, ArrayView2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::arch::{ArchSpec, N_BRANCHES, N_TRUNKS, TABLE1_PARAMS};
use super::ModelError;
use crate::data::{NormStats, SignalTrain, N_IC, N_STATES, WINDOW};
use crate::nn::{Mlp, MlpGrads, Mode, Tape};
use crate::util::mix_seeds;

/// Branch groups: the five main states share the product of branches 0–4;
/// u_egr uses 5 ⊙ 7 and u_vgt uses 6 ⊙ 8.
const MAIN_GROUP: [usize; 5] = [0, 1, 2, 3, 4];
const EGR_GROUP: [usize; 2] = [5, 7];
const VGT_GROUP: [usize; 2] = [6, 8];

fn group_of(state: usize) -> usize {
    match state {
        0..=4 => 0,
        5 => 1,
        _ => 2,
    }
}

fn group_members(g: usize) -> &'static [usize] {
    match g {
        0 => &MAIN_GROUP,
        1 => &EGR_GROUP,
        _ => &VGT_GROUP,
    }
}

/// Trunk coordinates `(j − 1)/9` for the ten points of a train, as a 10×1 matrix.
pub fn trunk_grid() -> Array2<f64> {
    Array2::from_shape_fn((WINDOW, 1), |(j, _)| j as f64 / (WINDOW - 1) as f64)
}

/// Normalized inputs of the nine branches for a batch of trains.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchInputs {
    pub x: Vec<Array2<f64>>,
}

impl BranchInputs {
    /// Uses each train's recorded initial conditions.
    pub fn from_trains(trains: &[SignalTrain], norm: &NormStats) -> Self {
        let ics: Vec<[f64; N_IC]> = trains.iter().map(SignalTrain::ic).collect();
        Self::with_ics(trains, &ics, norm)
    }

    /// Uses the given physical initial conditions
    /// `[P_im, P_em, omega_t, u_egr, u_vgt]`, one per train.
    pub fn with_ics(trains: &[SignalTrain], ics: &[[f64; N_IC]], norm: &NormStats) -> Self {
        assert_eq!(trains.len(), ics.len(), "one IC vector per train");
        let n = trains.len();
        let windows: Vec<_> = trains.iter().map(|t| norm.input_window(t)).collect();
        let ic_n: Vec<_> = ics.iter().map(|ic| norm.ic_vector(ic)).collect();
        let window = |c: usize| Array2::from_shape_fn((n, WINDOW), |(i, j)| windows[i][c][j]);
        let x = vec![
            window(0),
            window(1),
            window(2),
            window(3),
            Array2::from_shape_fn((n, 3), |(i, k)| ic_n[i][k]),
            window(2),
            window(3),
            Array2::from_shape_fn((n, 1), |(i, _)| ic_n[i][3]),
            Array2::from_shape_fn((n, 1), |(i, _)| ic_n[i][4]),
        ];
        Self { x }
    }

    pub fn len(&self) -> usize {
        self.x[0].nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows `idx` of every branch input.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self { x: self.x.iter().map(|a| a.select(ndarray::Axis(0), idx)).collect() }
    }
}

/// Normalized targets `(N, 7, 10)`.
pub fn target_tensor(trains: &[SignalTrain], norm: &NormStats) -> Array3<f64> {
    let t: Vec<_> = trains.iter().map(|t| norm.targets(t)).collect();
    Array3::from_shape_fn((trains.len(), N_STATES, WINDOW), |(i, s, j)| t[i][s][j])
}

/// Nine branches, seven trunks and the normalization they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepOnet {
    pub arch: ArchSpec,
    pub branches: Vec<Mlp>,
    pub trunks: Vec<Mlp>,
    pub norm: NormStats,
    /// Seed used for initialization.
    pub seed: u64,
}

/// Values kept from a forward pass for [`DeepOnet::backward`].
pub struct ForwardTape {
    branch_out: Vec<Array2<f64>>,
    branch_tapes: Vec<Tape>,
    trunk_out: Vec<Array2<f64>>,
    trunk_tapes: Vec<Tape>,
    merged: [Array2<f64>; 3],
}

/// Gradients for every branch and trunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub branches: Vec<MlpGrads>,
    pub trunks: Vec<MlpGrads>,
}

impl ModelGrads {
    pub fn all_finite(&self) -> bool {
        self.branches.iter().chain(&self.trunks).all(MlpGrads::all_finite)
    }

    /// Flattened in the same order as [`DeepOnet::param_mut`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = vec![];
        for g in self.branches.iter().chain(&self.trunks) {
            for (w, b) in g.w.iter().zip(&g.b) {
                out.extend(w.iter());
                out.extend(b.iter());
            }
        }
        out
    }
}

fn hadamard(arrays: &[&Array2<f64>]) -> Array2<f64> {
    let mut out = arrays[0].clone();
    for a in &arrays[1..] {
        out *= *a;
    }
    out
}

impl DeepOnet {
    pub fn new(arch: ArchSpec, norm: NormStats, seed: u64) -> Result<Self, ModelError> {
        arch.validate()?;
        let branches = (0..N_BRANCHES)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seeds(seed, &[0, i as u64]));
                Mlp::new(&arch.branch_spec(i), &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let trunks = (0..N_TRUNKS)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seeds(seed, &[1, i as u64]));
                Mlp::new(&arch.trunk_spec(), &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let model = Self { arch, branches, trunks, norm, seed };
        if model.arch.q == 128 && model.arch.width == 128 && model.param_count() != TABLE1_PARAMS {
            return Err(ModelError::Config(format!(
                "architecture drift: {} parameters, expected {TABLE1_PARAMS}",
                model.param_count()
            )));
        }
        Ok(model)
    }

    pub fn param_count(&self) -> usize {
        self.branches.iter().chain(&self.trunks).map(Mlp::param_count).sum()
    }

    pub fn has_dropout(&self) -> bool {
        self.branches.iter().any(Mlp::has_dropout)
    }

    /// Mutable access to parameter `index` in a flat ordering: branches then
    /// trunks, layer by layer, weights (row-major) before biases.
    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for net in self.branches.iter_mut().chain(self.trunks.iter_mut()) {
            let n = net.param_count();
            if index < n {
                net.bump_version();
                for layer in &mut net.layers {
                    if index < layer.w.len() {
                        return &mut layer.w.as_slice_mut().expect("standard layout")[index];
                    }
                    index -= layer.w.len();
                    if index < layer.b.len() {
                        return &mut layer.b[index];
                    }
                    index -= layer.b.len();
                }
            }
            index -= n;
        }
        panic!("parameter index out of range");
    }

    fn check(&self, inputs: &BranchInputs) -> Result<(), ModelError> {
        if inputs.x.len() != N_BRANCHES {
            return Err(ModelError::Config(format!("expected {N_BRANCHES} branch inputs, got {}", inputs.x.len())));
        }
        let n = inputs.len();
        for (i, x) in inputs.x.iter().enumerate() {
            if x.nrows() != n {
                return Err(ModelError::Config(format!("branch {i} input has {} rows, expected {n}", x.nrows())));
            }
        }
        Ok(())
    }

    fn branch_rng(seed: u64, i: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seeds(seed, &[i as u64]))
    }

    fn combine(merged: &[Array2<f64>; 3], trunk_out: &[Array2<f64>]) -> Array3<f64> {
        let n = merged[0].nrows();
        let mut pred = Array3::zeros((n, N_STATES, WINDOW));
        for s in 0..N_STATES {
            let p = merged[group_of(s)].dot(&trunk_out[s].t());
            pred.slice_mut(s![.., s, ..]).assign(&p);
        }
        pred
    }

    fn merge(branch_out: &[Array2<f64>]) -> [Array2<f64>; 3] {
        std::array::from_fn(|g| hadamard(&group_members(g).iter().map(|&i| &branch_out[i]).collect::<Vec<_>>()))
    }

    /// Normalized predictions `(N, 7, 10)`. Dropout masks in `Train`/`Mc`
    /// mode come from per-branch streams derived from `seed`.
    pub fn predict(&self, inputs: &BranchInputs, mode: Mode, seed: u64) -> Result<Array3<f64>, ModelError> {
        self.check(inputs)?;
        let grid = trunk_grid();
        let branch_out = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| b.predict(&inputs.x[i], mode, &mut Self::branch_rng(seed, i)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut no_rng = ChaCha8Rng::seed_from_u64(0);
        let trunk_out =
            self.trunks.iter().map(|t| t.predict(&grid, Mode::Eval, &mut no_rng)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::combine(&Self::merge(&branch_out), &trunk_out))
    }

    /// Forward pass that keeps what [`DeepOnet::backward`] needs. Same masks
    /// as [`DeepOnet::predict`] for the same `mode` and `seed`.
    pub fn forward(
        &self,
        inputs: &BranchInputs,
        mode: Mode,
        seed: u64,
    ) -> Result<(Array3<f64>, ForwardTape), ModelError> {
        self.check(inputs)?;
        let grid = trunk_grid();
        let mut branch_out = Vec::with_capacity(N_BRANCHES);
        let mut branch_tapes = Vec::with_capacity(N_BRANCHES);
        for (i, b) in self.branches.iter().enumerate() {
            let (y, tape) = b.forward(&inputs.x[i], mode, &mut Self::branch_rng(seed, i))?;
            branch_out.push(y);
            branch_tapes.push(tape);
        }
        let mut no_rng = ChaCha8Rng::seed_from_u64(0);
        let mut trunk_out = Vec::with_capacity(N_TRUNKS);
        let mut trunk_tapes = Vec::with_capacity(N_TRUNKS);
        for t in &self.trunks {
            let (y, tape) = t.forward(&grid, Mode::Eval, &mut no_rng)?;
            trunk_out.push(y);
            trunk_tapes.push(tape);
        }
        let merged = Self::merge(&branch_out);
        let pred = Self::combine(&merged, &trunk_out);
        Ok((pred, ForwardTape { branch_out, branch_tapes, trunk_out, trunk_tapes, merged }))
    }

    /// Gradients of a scalar loss given `dL/dpred` with shape `(N, 7, 10)`.
    pub fn backward(&self, tape: &ForwardTape, dpred: &Array3<f64>) -> Result<ModelGrads, ModelError> {
        let n = tape.merged[0].nrows();
        if dpred.dim() != (n, N_STATES, WINDOW) {
            return Err(ModelError::Config(format!("gradient shape {:?}, expected ({n}, 7, 10)", dpred.dim())));
        }
        let q = self.arch.q;
        let mut d_merged: [Array2<f64>; 3] = std::array::from_fn(|_| Array2::zeros((n, q)));
        let mut trunks = Vec::with_capacity(N_TRUNKS);
        for s in 0..N_STATES {
            let dp: ArrayView2<f64> = dpred.slice(s![.., s, ..]);
            let g = group_of(s);
            d_merged[g] += &dp.dot(&tape.trunk_out[s]);
            let dt = dp.t().dot(&tape.merged[g]);
            trunks.push(self.trunks[s].backward(&tape.trunk_tapes[s], &dt)?.0);
        }
        let mut branches: Vec<Option<MlpGrads>> = vec![None; N_BRANCHES];
        for (g, dm) in d_merged.iter().enumerate() {
            let members = group_members(g);
            for &i in members {
                let mut db = dm.clone();
                for &k in members.iter().filter(|&&k| k != i) {
                    Zip::from(&mut db).and(&tape.branch_out[k]).for_each(|d, &b| *d *= b);
                }
                branches[i] = Some(self.branches[i].backward(&tape.branch_tapes[i], &db)?.0);
            }
        }
        Ok(ModelGrads {
            branches: branches.into_iter().map(|b| b.expect("every branch is in a group")).collect(),
            trunks,
        })
    }

    /// Predictions in physical units, `[state][train][point]`.
    pub fn denormalize(&self, pred: &Array3<f64>) -> Array3<f64> {
        let mut out = pred.clone();
        for s in 0..N_STATES {
            out.slice_mut(s![.., s, ..]).mapv_inplace(|z| self.norm.denormalize_output(s, z));
        }
        out
    }
}
