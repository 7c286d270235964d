use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{CycleConfig, PipelineConfig};
use crate::deeponet::ArchSpec;
use crate::engine::EngineParams;
use crate::train::TrainConfig;
use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Directory holding every artifact; relative paths resolve against the
    /// config file's directory.
    pub workspace: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { workspace: PathBuf::from("work") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferConfig {
    /// MC-dropout samples.
    pub n_mc: usize,
    pub mc_seed: u64,
}

impl Default for InferConfig {
    fn default() -> Self {
        Self { n_mc: 100, mc_seed: 5 }
    }
}

/// The single JSON document driving every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub engine: EngineParams,
    pub cycle: CycleConfig,
    pub pipeline: PipelineConfig,
    pub model: ArchSpec,
    pub training: TrainConfig,
    pub inference: InferConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    /// Parses `text`, applying `key.path=value` overrides first. Values are
    /// read as JSON when they parse, otherwise as strings.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, String> {
        let mut root: Value = serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| format!("override `{o}` is not key=value"))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut root, key, value)?;
        }
        serde_json::from_value(root).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text, overrides)?;
        if cfg.paths.workspace.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.paths.workspace = base.join(&cfg.paths.workspace);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.engine.validate().map_err(|e| e.to_string())?;
        self.cycle.bounds.validate().map_err(|e| e.to_string())?;
        self.pipeline.validate().map_err(|e| e.to_string())?;
        self.model.validate().map_err(|e| e.to_string())?;
        self.training.validate().map_err(|e| e.to_string())?;
        if self.inference.n_mc < 2 {
            return Err("inference.n_mc must be at least 2".into());
        }
        Ok(())
    }

    fn hash_of(v: &impl Serialize) -> String {
        sha256_hex(serde_json::to_string(v).expect("config serializes").as_bytes())[..16].to_string()
    }

    /// Hash of the full configuration except the workspace location.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.paths = PathsConfig::default();
        Self::hash_of(&c)
    }

    /// Hash of the blocks that determine the dataset.
    pub fn data_hash(&self) -> String {
        Self::hash_of(&(
            &self.engine,
            &self.cycle,
            &self.pipeline.window,
            &self.pipeline.stride,
            &self.pipeline.test_span,
            &self.pipeline.test_length,
        ))
    }

    /// Hash of the blocks that determine a trained model.
    pub fn training_hash(&self) -> String {
        Self::hash_of(&(self.data_hash(), &self.model, &self.training))
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), String> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| format!("override `{key}`: `{part}` is not inside an object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Err(format!("empty override key `{key}`"))
}
