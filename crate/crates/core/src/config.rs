//! JSON run configuration and run manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acquisition::{CaseConfig, SequenceParams};
use crate::error::{Error, Result};
use crate::eval::{Comparison, ZeroMethod};
use crate::phantom::PhantomSpec;
use crate::srr::SolverConfig;

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Per-subject DSC table read by `evaluate`.
    pub dsc_csv: Option<PathBuf>,
    /// `configuration:reference` pairs.
    pub comparisons: Vec<String>,
    pub alpha: f64,
    pub zeros: ZeroMethod,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            dsc_csv: None,
            comparisons: Vec::new(),
            alpha: 0.05,
            zeros: ZeroMethod::Drop,
        }
    }
}

impl EvaluationConfig {
    pub fn parsed_comparisons(&self) -> Result<Vec<Comparison>> {
        self.comparisons
            .iter()
            .map(|s| s.parse().map_err(Error::Config))
            .collect()
    }
}

/// Settings of the `pipeline` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub subjects: usize,
    /// Every n-th subject gets enlarged ventricles; 0 disables.
    pub pathological_every: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            subjects: 2,
            pathological_every: 2,
        }
    }
}

/// Every setting of a run. CLI flags override individual keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    /// Master seed: phantom jitter and every acquisition stream derive from it.
    pub seed: u64,
    /// The phantom's own `seed` is replaced by the master seed.
    pub phantom: PhantomSpec,
    pub sequence: SequenceParams,
    /// Relaxation table CSV (`class,field,T1,T2,PD`); the built-in table when unset.
    pub tissue_table: Option<PathBuf>,
    pub case: CaseConfig,
    pub solver: SolverConfig,
    pub evaluation: EvaluationConfig,
    pub pipeline: PipelineConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: CONFIG_SCHEMA,
            seed: 42,
            phantom: PhantomSpec::default(),
            sequence: SequenceParams::default(),
            tissue_table: None,
            case: CaseConfig::default(),
            solver: SolverConfig::default(),
            evaluation: EvaluationConfig::default(),
            pipeline: PipelineConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Reads a config file, or the config embedded in a run manifest.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let value = match value.get("manifest_schema") {
            Some(_) => value
                .get("config")
                .cloned()
                .ok_or_else(|| Error::Config(format!("{}: manifest without config", path.display())))?,
            None => value,
        };
        let cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {} (expected {CONFIG_SCHEMA})",
                self.schema
            )));
        }
        self.sequence.validate()?;
        self.solver.validate()?;
        self.evaluation.parsed_comparisons()?;
        if !(self.evaluation.alpha > 0.0 && self.evaluation.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1)", self.evaluation.alpha)));
        }
        if self.pipeline.subjects == 0 {
            return Err(Error::Config("pipeline needs at least one subject".into()));
        }
        Ok(())
    }

    /// Phantom spec with the master seed applied.
    pub fn phantom_spec(&self) -> PhantomSpec {
        PhantomSpec {
            seed: self.seed,
            ..self.phantom.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// sha256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub const MANIFEST_SCHEMA: u32 = 1;

/// Record of one run. Contains no timestamps, so identical runs give
/// identical manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_schema: u32,
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub seeds: Vec<(String, u64)>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub config: RunConfig,
}

fn display_path(p: &Path, base: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Manifest {
        Manifest {
            manifest_schema: MANIFEST_SCHEMA,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config.hash(),
            seeds: vec![("master".into(), config.seed)],
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            path: path.to_string_lossy().replace('\\', "/"),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    /// Records an output; paths are stored relative to `base`.
    pub fn add_output(&mut self, path: &Path, base: &Path) -> Result<()> {
        self.outputs.push(FileDigest {
            path: display_path(path, base),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
