use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{ExogenousConfig, NodeConfig, Scm, ScmConfig};
use super::noise::NoiseSpec;
use super::operator::StructuralOperator;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::linalg;
use crate::rng;

/// One noise spec shared by all coordinates, or one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseList {
    Shared(NoiseSpec),
    PerCoordinate(Vec<NoiseSpec>),
}

/// Compact file form of a linear additive model: `m` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScmConfig {
    pub m: Vec<f64>,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub noise: NoiseList,
    pub s: NoiseSpec,
}

/// `X = M X + w S + b + U_X`, with `S = U_S` independent of `U_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearAdditiveScm {
    m: Array2<f64>,
    w: Array1<f64>,
    b: Array1<f64>,
    noise: Vec<NoiseSpec>,
    s_spec: NoiseSpec,
    /// `(I - M)^{-1}`
    inv: Array2<f64>,
}

impl LinearAdditiveScm {
    pub fn new(m: Array2<f64>, w: Array1<f64>, b: Array1<f64>, noise: Vec<NoiseSpec>, s_spec: NoiseSpec) -> Result<Self> {
        let d = w.len();
        if m.dim() != (d, d) || b.len() != d || noise.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "M is {:?}, w has {d} entries, b has {}, noise has {}",
                m.dim(),
                b.len(),
                noise.len()
            )));
        }
        for spec in noise.iter().chain(std::iter::once(&s_spec)) {
            spec.validate()?;
        }
        // x_k depends on x_j whenever M[k, j] != 0
        let parents: Vec<Vec<usize>> = (0..d).map(|k| (0..d).filter(|&j| m[[k, j]] != 0.0).collect()).collect();
        super::model::topological_order(&parents)?;
        let inv = linalg::checked_inverse(&(Array2::eye(d) - &m))?;
        Ok(LinearAdditiveScm { m, w, b, noise, s_spec, inv })
    }

    pub fn from_config(cfg: &LinearScmConfig) -> Result<Self> {
        let d = cfg.w.len();
        if cfg.m.len() != d * d {
            return Err(Error::DimensionMismatch(format!("M has {} entries, expected {}", cfg.m.len(), d * d)));
        }
        let noise = match &cfg.noise {
            NoiseList::Shared(spec) => vec![spec.clone(); d],
            NoiseList::PerCoordinate(v) => v.clone(),
        };
        Self::new(
            Array2::from_shape_vec((d, d), cfg.m.clone()).expect("checked"),
            Array1::from(cfg.w.clone()),
            Array1::from(cfg.b.clone()),
            noise,
            cfg.s.clone(),
        )
    }

    pub fn to_config(&self) -> LinearScmConfig {
        LinearScmConfig {
            m: self.m.iter().copied().collect(),
            w: self.w.to_vec(),
            b: self.b.to_vec(),
            noise: NoiseList::PerCoordinate(self.noise.clone()),
            s: self.s_spec.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn m(&self) -> &Array2<f64> {
        &self.m
    }

    pub fn w(&self) -> &Array1<f64> {
        &self.w
    }

    pub fn b(&self) -> &Array1<f64> {
        &self.b
    }

    pub fn noise(&self) -> &[NoiseSpec] {
        &self.noise
    }

    pub fn s_spec(&self) -> &NoiseSpec {
        &self.s_spec
    }

    pub fn inverse(&self) -> &Array2<f64> {
        &self.inv
    }

    /// Endogenous features for a given sensitive value and noise draw.
    pub fn solve(&self, s: f64, u: &[f64]) -> Array1<f64> {
        let rhs = &self.w * s + &self.b + &Array1::from(u.to_vec());
        self.inv.dot(&rhs)
    }

    /// `E[X | S = s]`.
    pub fn conditional_mean(&self, s: f64) -> Array1<f64> {
        let mean_u: Array1<f64> = self.noise.iter().map(NoiseSpec::mean).collect();
        self.inv.dot(&(&self.w * s + &self.b + &mean_u))
    }

    /// `E[X]`.
    pub fn mean(&self) -> Array1<f64> {
        self.conditional_mean(self.s_spec.mean())
    }

    /// Draws `n` rows of `(x, s)`, chunk-seeded like [`Scm::sample`].
    pub fn sample(&self, n: usize, seed: u64) -> Result<(Array2<f64>, Vec<f64>)> {
        if n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        let d = self.dim();
        let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..n.div_ceil(rng::CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut r = rng::chunk_rng(seed, c);
                let rows = rng::CHUNK.min(n - c * rng::CHUNK);
                let mut xs = Vec::with_capacity(rows * d);
                let mut ss = Vec::with_capacity(rows);
                let mut u = vec![0.0; d];
                for _ in 0..rows {
                    let s = self.s_spec.sample(&mut r);
                    for (k, spec) in self.noise.iter().enumerate() {
                        u[k] = spec.sample(&mut r);
                    }
                    xs.extend(self.solve(s, &u).iter());
                    ss.push(s);
                }
                (xs, ss)
            })
            .collect();
        let mut xs = Vec::with_capacity(n * d);
        let mut ss = Vec::with_capacity(n);
        for (x, s) in chunks {
            xs.extend(x);
            ss.extend(s);
        }
        Ok((Array2::from_shape_vec((n, d), xs).expect("shape"), ss))
    }

    /// Draws `n` feature rows with the sensitive attribute held at `s`.
    pub fn sample_group(&self, s: f64, n: usize, seed: u64) -> Result<Array2<f64>> {
        if n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        let d = self.dim();
        let chunks: Vec<Vec<f64>> = (0..n.div_ceil(rng::CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut r = rng::chunk_rng(seed, c);
                let rows = rng::CHUNK.min(n - c * rng::CHUNK);
                let mut xs = Vec::with_capacity(rows * d);
                let mut u = vec![0.0; d];
                for _ in 0..rows {
                    for (k, spec) in self.noise.iter().enumerate() {
                        u[k] = spec.sample(&mut r);
                    }
                    xs.extend(self.solve(s, &u).iter());
                }
                xs
            })
            .collect();
        Ok(Array2::from_shape_vec((n, d), chunks.concat()).expect("shape"))
    }

    /// `T*⟨s'|s⟩(x) = x + (I − M)^{-1} w (s' − s)`.
    pub fn structural_operator(&self, s: Group, s_prime: Group) -> StructuralOperator {
        let shift = self.inv.dot(&self.w) * (s_prime.value() - s.value());
        StructuralOperator::Translation { shift: shift.to_vec() }
    }

    /// The same model as a generic [`Scm`] with nodes `S, X1..Xd`.
    pub fn to_scm(&self) -> Result<Scm> {
        let d = self.dim();
        let mut exogenous = vec![ExogenousConfig {
            name: "U_S".into(),
            dist: self.s_spec.clone(),
        }];
        let mut nodes = vec![NodeConfig {
            name: "S".into(),
            parents: vec![],
            exogenous: vec!["U_S".into()],
            mechanism: "U_S".into(),
        }];
        for k in 0..d {
            exogenous.push(ExogenousConfig {
                name: format!("U_X{}", k + 1),
                dist: self.noise[k].clone(),
            });
            let mut parents = vec!["S".to_string()];
            let mut terms = vec![format!("{:?}", self.b[k]), format!("{:?} * S", self.w[k])];
            for j in 0..d {
                if self.m[[k, j]] != 0.0 {
                    parents.push(format!("X{}", j + 1));
                    terms.push(format!("{:?} * X{}", self.m[[k, j]], j + 1));
                }
            }
            terms.push(format!("U_X{}", k + 1));
            nodes.push(NodeConfig {
                name: format!("X{}", k + 1),
                parents,
                exogenous: vec![format!("U_X{}", k + 1)],
                mechanism: terms.join(" + "),
            });
        }
        Scm::from_config(&ScmConfig {
            exogenous,
            nodes,
            joint_gaussian: vec![],
        })
    }
}
