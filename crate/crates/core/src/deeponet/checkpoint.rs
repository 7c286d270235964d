use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::arch::{ArchSpec, N_BRANCHES, N_TRUNKS};
use super::loss::SaWeights;
use super::model::{DeepOnet, ModelGrads};
use super::{CheckpointError, ModelError};
use crate::data::NormStats;
use crate::nn::{AdamState, BufferFragment, MlpFragment, NnError};
use crate::util::sha256_hex;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Adam moments for every branch and trunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAdam {
    pub branches: Vec<AdamState>,
    pub trunks: Vec<AdamState>,
}

impl ModelAdam {
    pub fn new(model: &DeepOnet) -> Self {
        Self {
            branches: model.branches.iter().map(AdamState::new).collect(),
            trunks: model.trunks.iter().map(AdamState::new).collect(),
        }
    }

    /// One Adam step on every network. Nothing changes if any gradient is
    /// non-finite.
    pub fn step(&mut self, model: &mut DeepOnet, grads: &ModelGrads, lr: f64) -> Result<(), ModelError> {
        if !grads.all_finite() {
            return Err(ModelError::Nn(NnError::NonFiniteGradient));
        }
        for ((state, net), g) in self.branches.iter_mut().zip(&mut model.branches).zip(&grads.branches) {
            state.step(net, g, lr)?;
        }
        for ((state, net), g) in self.trunks.iter_mut().zip(&mut model.trunks).zip(&grads.trunks) {
            state.step(net, g, lr)?;
        }
        Ok(())
    }
}

/// Where a run stands when the checkpoint was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    /// Number of completed epochs.
    pub epoch: usize,
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdamFragment {
    t: u64,
    m: BufferFragment,
    v: BufferFragment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Body {
    format_version: u32,
    arch: ArchSpec,
    norm_stats: NormStats,
    model_seed: u64,
    branches: Vec<MlpFragment>,
    trunks: Vec<MlpFragment>,
    sa_weights: SaWeights,
    adam: Option<Vec<AdamFragment>>,
    training: TrainingMeta,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    sha256: String,
    checkpoint: Body,
}

#[derive(Deserialize)]
struct VersionProbe {
    checkpoint: ProbeBody,
}

#[derive(Deserialize)]
struct ProbeBody {
    format_version: u32,
}

/// Everything needed to predict with, or resume training of, a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: DeepOnet,
    pub sa: SaWeights,
    pub adam: Option<ModelAdam>,
    pub meta: TrainingMeta,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let m = &self.model;
        let adam = self.adam.as_ref().map(|a| {
            a.branches
                .iter()
                .chain(&a.trunks)
                .map(|s| {
                    let (m, v) = s.to_fragments();
                    AdamFragment { t: s.t, m, v }
                })
                .collect()
        });
        let body = Body {
            format_version: CHECKPOINT_VERSION,
            arch: m.arch.clone(),
            norm_stats: m.norm.clone(),
            model_seed: m.seed,
            branches: m.branches.iter().map(|n| MlpFragment::from_mlp(n, m.seed)).collect(),
            trunks: m.trunks.iter().map(|n| MlpFragment::from_mlp(n, m.seed)).collect(),
            sa_weights: self.sa.clone(),
            adam,
            training: self.meta.clone(),
        };
        let sha256 = sha256_hex(serde_json::to_string(&body).expect("checkpoint serializes").as_bytes());
        serde_json::to_string(&Envelope { sha256, checkpoint: body }).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let probe: VersionProbe = serde_json::from_str(text).map_err(classify)?;
        if probe.checkpoint.format_version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version {
                found: probe.checkpoint.format_version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let env: Envelope = serde_json::from_str(text).map_err(classify)?;
        let recomputed = sha256_hex(serde_json::to_string(&env.checkpoint).expect("checkpoint serializes").as_bytes());
        let body = env.checkpoint;
        let net = |kind: &'static str, i: usize, f: &MlpFragment| {
            f.to_mlp().map_err(|e| match e {
                NnError::UnknownActivation(name) => {
                    CheckpointError::UnknownActivation { network: format!("{kind} {i}"), name }
                }
                NnError::NonFinite { layer } => CheckpointError::NonFinite { network: format!("{kind} {i}"), layer },
                other => CheckpointError::Corrupt(format!("{kind} {i}: {other}")),
            })
        };
        let branches =
            body.branches.iter().enumerate().map(|(i, f)| net("branch", i, f)).collect::<Result<Vec<_>, _>>()?;
        let trunks = body.trunks.iter().enumerate().map(|(i, f)| net("trunk", i, f)).collect::<Result<Vec<_>, _>>()?;
        if recomputed != env.sha256 {
            return Err(CheckpointError::Checksum);
        }
        if branches.len() != N_BRANCHES || trunks.len() != N_TRUNKS {
            return Err(CheckpointError::Corrupt(format!(
                "{} branches and {} trunks, expected {N_BRANCHES} and {N_TRUNKS}",
                branches.len(),
                trunks.len()
            )));
        }
        for (i, b) in branches.iter().enumerate() {
            let spec = body.arch.branch_spec(i);
            if b.input_dim() != spec.input || b.output_dim() != spec.output || b.param_count() != spec.param_count() {
                return Err(CheckpointError::Corrupt(format!("branch {i} does not match the architecture")));
            }
        }
        if !body.sa_weights.all_finite() || !body.norm_stats.all_finite() {
            return Err(CheckpointError::NonFinite { network: "sa_weights/norm_stats".into(), layer: 0 });
        }
        let model = DeepOnet { arch: body.arch, branches, trunks, norm: body.norm_stats, seed: body.model_seed };
        let adam = match body.adam {
            None => None,
            Some(frags) => {
                if frags.len() != N_BRANCHES + N_TRUNKS {
                    return Err(CheckpointError::Corrupt("optimizer state has the wrong network count".into()));
                }
                let nets = model.branches.iter().chain(&model.trunks);
                let states = nets
                    .zip(&frags)
                    .map(|(n, f)| AdamState::from_fragments(n, &f.m, &f.v, f.t))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CheckpointError::Corrupt(format!("optimizer state: {e}")))?;
                let mut it = states.into_iter();
                Some(ModelAdam { branches: it.by_ref().take(N_BRANCHES).collect(), trunks: it.collect() })
            }
        };
        Ok(Self { model, sa: body.sa_weights, adam, meta: body.training })
    }

    /// Writes via a temporary file and a rename so readers never see a
    /// partial checkpoint.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io = |source| CheckpointError::Io { path: path.to_path_buf(), source };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("json.tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(self.to_json().as_bytes()).and_then(|_| f.sync_all()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                CheckpointError::Missing(path.to_path_buf())
            } else {
                CheckpointError::Io { path: path.to_path_buf(), source }
            }
        })?;
        Self::from_json(&text)
    }
}

fn classify(e: serde_json::Error) -> CheckpointError {
    if e.is_eof() {
        CheckpointError::Truncated
    } else {
        CheckpointError::Corrupt(e.to_string())
    }
}

/// `dir/ckpt-epoch-NNNNNN.json`.
pub fn checkpoint_path(dir: &Path, epoch: usize) -> PathBuf {
    dir.join(format!("ckpt-epoch-{epoch:06}.json"))
}

/// Checkpoints in `dir`, sorted by epoch.
pub fn list_checkpoints(dir: &Path) -> Vec<(usize, PathBuf)> {
    let mut found: Vec<(usize, PathBuf)> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let epoch = name.strip_prefix("ckpt-epoch-")?.strip_suffix(".json")?.parse().ok()?;
            Some((epoch, e.path()))
        })
        .collect();
    found.sort();
    found
}

pub fn latest_checkpoint(dir: &Path) -> Option<(usize, PathBuf)> {
    list_checkpoints(dir).pop()
}

/// Deletes all but the newest `keep` checkpoints.
pub fn prune_checkpoints(dir: &Path, keep: usize) -> Result<(), CheckpointError> {
    let all = list_checkpoints(dir);
    let drop = all.len().saturating_sub(keep);
    for (_, p) in &all[..drop] {
        fs::remove_file(p).map_err(|source| CheckpointError::Io { path: p.clone(), source })?;
    }
    Ok(())
}
