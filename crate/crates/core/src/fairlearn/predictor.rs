use std::path::Path;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{FeatureMap, TrainConfig};
use crate::data::dataset::fmt_f64;
use crate::data::Task;
use crate::error::{Error, Result};
use crate::fairness::Predictor;
use crate::group::Group;

/// `h_θ(x, s) = θᵀΦ(x, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    theta: Array1<f64>,
    feature_map: FeatureMap,
    input_dim: usize,
    task: Task,
}

impl LinearPredictor {
    pub fn new(theta: Array1<f64>, feature_map: FeatureMap, input_dim: usize, task: Task) -> Result<Self> {
        let p = feature_map.dim(input_dim)?;
        if theta.len() != p {
            return Err(Error::DimensionMismatch(format!("theta has {} entries, features have {p}", theta.len())));
        }
        Ok(LinearPredictor {
            theta,
            feature_map,
            input_dim,
            task,
        })
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn to_file(&self, config: Option<&TrainConfig>) -> ModelFile {
        ModelFile {
            task: self.task,
            feature_map: self.feature_map.clone(),
            input_dim: self.input_dim,
            p: self.theta.len(),
            theta: self.theta.iter().map(|v| fmt_f64(*v)).collect(),
            config: config.cloned(),
        }
    }

    pub fn save(&self, path: &Path, config: Option<&TrainConfig>) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_file(config)).expect("model serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::ParseFailure(format!("{}: {e}", path.display())))?;
        file.into_predictor()
    }
}

impl Predictor for LinearPredictor {
    fn score(&self, x: ArrayView1<'_, f64>, s: Group) -> f64 {
        let mut phi = vec![0.0; self.theta.len()];
        self.feature_map.fill(x, s, &mut phi);
        phi.iter().zip(self.theta.iter()).map(|(a, b)| a * b).sum()
    }

    fn task(&self) -> Task {
        self.task
    }
}

/// On-disk form of a trained predictor. Parameters are stored as decimal
/// strings with 17 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub task: Task,
    pub feature_map: FeatureMap,
    pub input_dim: usize,
    pub p: usize,
    pub theta: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<TrainConfig>,
}

impl ModelFile {
    pub fn into_predictor(self) -> Result<LinearPredictor> {
        let theta: Vec<f64> = self
            .theta
            .iter()
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::ParseFailure(format!("bad parameter `{t}`"))))
            .collect::<Result<_>>()?;
        if theta.len() != self.p {
            return Err(Error::DimensionMismatch(format!("p = {} but {} parameters", self.p, theta.len())));
        }
        LinearPredictor::new(Array1::from(theta), self.feature_map, self.input_dim, self.task)
    }
}
