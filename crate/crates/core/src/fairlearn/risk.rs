use ndarray::{Array1, Array2};

use super::FeatureMap;
use crate::cfmodel::CounterfactualModel;
use crate::data::{Dataset, Task};
use crate::error::{Error, Result};

/// Logistic loss on a score: `log(1 + e^z) − y z`.
fn logistic(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// The empirical risk
///
/// `R_n(θ) = (1/n) Σ_i ℓ(θᵀΦ_i, y_i) + (1/n) Σ_i λ n_{s_i} Σ_{s'≠s_i} Σ_j π⟨s'|s_i⟩(i,j) (θᵀΦ_i − θᵀΦ'_j)²`
///
/// with the features precomputed. The penalty is a quadratic form `θᵀQθ`,
/// assembled once from the coupling entries.
#[derive(Debug, Clone)]
pub struct Objective {
    task: Task,
    phi: Array2<f64>,
    y: Array1<f64>,
    q: Array2<f64>,
}

impl Objective {
    pub fn new(fm: &FeatureMap, data: &Dataset, m: &CounterfactualModel, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be a finite nonnegative number, got {lambda}")));
        }
        if m.data().dim() != data.d() {
            return Err(Error::DimensionMismatch(format!(
                "model atoms live in R^{}, data in R^{}",
                m.data().dim(),
                data.d()
            )));
        }
        let p = fm.dim(data.d())?;
        let mut phi = Array2::zeros((data.n(), p));
        for i in 0..data.n() {
            fm.fill(data.row(i), data.s()[i], phi.row_mut(i).as_slice_mut().expect("row-major"));
        }
        let mut q = Array2::zeros((p, p));
        if lambda > 0.0 {
            let n = m.data().n_atoms() as f64;
            let labels = m.groups();
            let mut a = vec![0.0; p];
            let mut b = vec![0.0; p];
            let mut diff = vec![0.0; p];
            for &s in &labels {
                let mu = m.data().group(s)?;
                let n_s = mu.len() as f64;
                for &t in labels.iter().filter(|&&t| t != s) {
                    let c = m.coupling(s, t)?;
                    let targets = m.target_points(s, t)?;
                    for e in c.entries() {
                        fm.fill(mu.point(e.i), s, &mut a);
                        fm.fill(targets.row(e.j), t, &mut b);
                        for k in 0..p {
                            diff[k] = a[k] - b[k];
                        }
                        let w = lambda * n_s * e.mass / n;
                        for k in 0..p {
                            if diff[k] == 0.0 {
                                continue;
                            }
                            for l in 0..p {
                                q[[k, l]] += w * diff[k] * diff[l];
                            }
                        }
                    }
                }
            }
        }
        Ok(Objective {
            task: data.task(),
            phi,
            y: data.y().clone(),
            q,
        })
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Penalty matrix `Q`, so that the penalty is `θᵀQθ`.
    pub fn penalty_matrix(&self) -> &Array2<f64> {
        &self.q
    }

    fn check(&self, theta: &Array1<f64>) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("theta has {} entries, features have {}", theta.len(), self.dim())));
        }
        Ok(())
    }

    pub fn data_term(&self, theta: &Array1<f64>) -> Result<f64> {
        self.check(theta)?;
        let z = self.phi.dot(theta);
        let total: f64 = match self.task {
            Task::Classification => z.iter().zip(self.y.iter()).map(|(&z, &y)| logistic(z, y)).sum(),
            Task::Regression => z.iter().zip(self.y.iter()).map(|(&z, &y)| (z - y) * (z - y)).sum(),
        };
        Ok(total / self.phi.nrows() as f64)
    }

    pub fn penalty(&self, theta: &Array1<f64>) -> Result<f64> {
        self.check(theta)?;
        Ok(theta.dot(&self.q.dot(theta)))
    }

    pub fn risk(&self, theta: &Array1<f64>) -> Result<f64> {
        Ok(self.data_term(theta)? + self.penalty(theta)?)
    }

    pub fn gradient(&self, theta: &Array1<f64>) -> Result<Array1<f64>> {
        self.check(theta)?;
        let z = self.phi.dot(theta);
        let dz: Array1<f64> = match self.task {
            Task::Classification => z.iter().zip(self.y.iter()).map(|(&z, &y)| sigmoid(z) - y).collect(),
            Task::Regression => z.iter().zip(self.y.iter()).map(|(&z, &y)| 2.0 * (z - y)).collect(),
        };
        let n = self.phi.nrows() as f64;
        Ok(self.phi.t().dot(&dz) / n + self.q.dot(theta) * 2.0)
    }
}

/// [`Objective::risk`] for a single evaluation.
pub fn empirical_risk(theta: &Array1<f64>, fm: &FeatureMap, data: &Dataset, m: &CounterfactualModel, lambda: f64) -> Result<f64> {
    Objective::new(fm, data, m, lambda)?.risk(theta)
}

/// [`Objective::gradient`] for a single evaluation.
pub fn risk_gradient(
    theta: &Array1<f64>,
    fm: &FeatureMap,
    data: &Dataset,
    m: &CounterfactualModel,
    lambda: f64,
) -> Result<Array1<f64>> {
    Objective::new(fm, data, m, lambda)?.gradient(theta)
}
