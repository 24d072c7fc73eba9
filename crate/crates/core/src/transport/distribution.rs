use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOL: f64 = 1e-9;

/// A weighted point cloud in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    points: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteDistribution {
    pub fn new(points: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch(format!("{n} atoms but {} weights", weights.len())));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("negative or non-finite weight".into()));
        }
        let total: f64 = weights.sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteDistribution { points, weights })
    }

    /// Empirical measure `n^{-1} Σ δ_{x_i}`.
    pub fn uniform(points: Array2<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        Self::new(points, Array1::from_elem(n, 1.0 / n as f64))
    }

    /// One-dimensional convenience constructor with uniform weights.
    pub fn uniform_1d(values: &[f64]) -> Result<Self> {
        Self::uniform(Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("shape"))
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn mean(&self) -> Array1<f64> {
        self.weights.dot(&self.points)
    }
}
