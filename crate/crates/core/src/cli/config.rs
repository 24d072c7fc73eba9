//! TOML configs for the subcommands. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{OutcomeSpec, Task};
use crate::error::{Error, Result};
use crate::fairlearn::TrainConfig;
use crate::group::Group;
use crate::scm::LinearScmConfig;

/// A parsed config plus its raw form, echoed into the run manifest.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub config: T,
    pub raw: toml::Table,
    pub base: PathBuf,
}

impl<T> Loaded<T> {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    let config = T::deserialize(raw.clone())
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, raw, base })
}

fn seventy_percent() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default)]
    pub seed: u64,
    pub n: usize,
    #[serde(default = "seventy_percent")]
    pub train_fraction: f64,
    #[serde(default = "regression")]
    pub task: Task,
    pub scm: LinearScmConfig,
    pub outcome: OutcomeSpec,
}

fn regression() -> Task {
    Task::Regression
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleConfig {
    pub schema: PathBuf,
    pub train: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub schema: PathBuf,
    pub train: PathBuf,
    /// Directory written by `couple`, or a model directory itself.
    pub models: PathBuf,
    #[serde(default)]
    pub learner: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

fn ten() -> usize {
    10
}

/// Either a fixed split with models from `couple` (`train`, `test`,
/// `models`) or a single file re-split every repeat (`data`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: u64,
    pub schema: PathBuf,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub data: Option<PathBuf>,
    #[serde(default = "seventy_percent")]
    pub train_fraction: f64,
    #[serde(default = "ten")]
    pub repeats: usize,
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub learner: TrainConfig,
    pub tolerance: Option<ToleranceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub schema: PathBuf,
    pub data: PathBuf,
    pub model: PathBuf,
    pub predictor: PathBuf,
    /// Training file whose encoding (levels, standardization) `data` should
    /// reuse.
    pub encoder_from: Option<PathBuf>,
    #[serde(default)]
    pub tolerance: Option<ToleranceConfig>,
}

fn default_sizes() -> Vec<usize> {
    vec![200, 2000]
}

fn five() -> usize {
    5
}

fn group_one() -> Group {
    Group(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "five")]
    pub seeds: usize,
    #[serde(default)]
    pub s: Group,
    #[serde(default = "group_one")]
    pub s_prime: Group,
    pub scm: LinearScmConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.toml");
        std::fs::write(
            &path,
            "[scm]\nm = [0.0, 0.0, 0.0, 0.0]\nw = [1.0, 1.0]\nb = [0.0, 0.0]\nnoise = { family = \"gaussian\", mean = 0.0, sd = 1.0 }\ns = { family = \"bernoulli\", p = 0.5 }\n",
        )
        .unwrap();
        let loaded: Loaded<VerifyConfig> = load(&path).unwrap();
        assert_eq!(loaded.config.sizes, vec![200, 2000]);
        assert_eq!(loaded.config.seeds, 5);
        assert_eq!(loaded.config.s_prime, Group(1));
        assert_eq!(loaded.resolve(Path::new("x.csv")), dir.path().join("x.csv"));
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "schema = \"a\"\ntrain = \"b\"\ntest = \"c\"\nbogus = 1\n").unwrap();
        assert!(matches!(load::<CoupleConfig>(&path), Err(Error::Config(_))));
    }
}
