use ndarray::Array2;

use super::distribution::DiscreteDistribution;
use crate::error::{Error, Result};

/// `C[i][j] = ‖x_i − x'_j‖²`.
pub fn sq_euclidean_cost(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<Array2<f64>> {
    sq_euclidean_points(p.points(), q.points())
}

pub fn sq_euclidean_points(xs: &Array2<f64>, ys: &Array2<f64>) -> Result<Array2<f64>> {
    if xs.ncols() != ys.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "points live in R^{} and R^{}",
            xs.ncols(),
            ys.ncols()
        )));
    }
    let mut cost = Array2::zeros((xs.nrows(), ys.nrows()));
    for (i, x) in xs.rows().into_iter().enumerate() {
        for (j, y) in ys.rows().into_iter().enumerate() {
            cost[[i, j]] = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    }
    Ok(cost)
}
