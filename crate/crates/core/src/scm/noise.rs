use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of one exogenous variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Bernoulli { p: f64 },
    Constant { value: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseSpec::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            NoiseSpec::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            NoiseSpec::Bernoulli { p } => (0.0..=1.0).contains(&p),
            NoiseSpec::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid noise parameters {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { mean, .. } => mean,
            NoiseSpec::Uniform { low, high } => 0.5 * (low + high),
            NoiseSpec::Bernoulli { p } => p,
            NoiseSpec::Constant { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sd, .. } => sd * sd,
            NoiseSpec::Uniform { low, high } => (high - low).powi(2) / 12.0,
            NoiseSpec::Bernoulli { p } => p * (1.0 - p),
            NoiseSpec::Constant { .. } => 0.0,
        }
    }

    /// Whether the distribution has a point mass everywhere it lives.
    pub fn is_degenerate(&self) -> bool {
        self.variance() == 0.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::Gaussian { mean, sd } => {
                if sd == 0.0 {
                    mean
                } else {
                    Normal::new(mean, sd).expect("validated").sample(rng)
                }
            }
            NoiseSpec::Uniform { low, high } => Uniform::new(low, high).expect("validated").sample(rng),
            NoiseSpec::Bernoulli { p } => {
                if Bernoulli::new(p).expect("validated").sample(rng) {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseSpec::Constant { value } => value,
        }
    }
}

/// A block of exogenous variables drawn jointly from a multivariate normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointGaussian {
    pub members: Vec<String>,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl JointGaussian {
    /// Lower Cholesky factor of the covariance.
    pub(crate) fn cholesky(&self) -> Result<Vec<Vec<f64>>> {
        let k = self.members.len();
        if self.mean.len() != k || self.cov.len() != k || self.cov.iter().any(|r| r.len() != k) {
            return Err(Error::Config("joint gaussian block has inconsistent sizes".into()));
        }
        let mut l = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..=i {
                let acc = self.cov[i][j] - (0..j).map(|t| l[i][t] * l[j][t]).sum::<f64>();
                if i == j {
                    if acc < 0.0 {
                        return Err(Error::Config("joint gaussian covariance is not positive semidefinite".into()));
                    }
                    l[i][j] = acc.sqrt();
                } else if l[j][j] > 0.0 {
                    l[i][j] = acc / l[j][j];
                }
            }
        }
        Ok(l)
    }
}
