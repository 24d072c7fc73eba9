use ndarray::Array2;
use rand::Rng;

use super::coupling::Coupling;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Violations smaller than this are attributed to rounding.
pub const MONOTONICITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub pairs_checked: usize,
    pub violations: usize,
    /// Largest `c(x_i,y_j) + c(x_k,y_l) − c(x_i,y_l) − c(x_k,y_j)` over the
    /// checked pairs of support entries, floored at zero.
    pub max_violation: f64,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Two-cycle check of c-cyclical monotonicity on the support of `c`.
/// Every pair is checked when there are at most `trials` of them; otherwise
/// `trials` pairs are drawn at random.
pub fn check_cyclical_monotonicity(c: &Coupling, cost: &Array2<f64>, trials: usize, seed: u64) -> Result<MonotonicityReport> {
    if cost.dim() != (c.n_src(), c.n_tgt()) {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix is {:?}, coupling is {}x{}",
            cost.dim(),
            c.n_src(),
            c.n_tgt()
        )));
    }
    let support: Vec<(usize, usize)> = c.entries().iter().map(|e| (e.i, e.j)).collect();
    let k = support.len();
    let mut report = MonotonicityReport { pairs_checked: 0, violations: 0, max_violation: 0.0 };
    let mut check = |a: usize, b: usize| {
        let (i, j) = support[a];
        let (l, m) = support[b];
        let gap = cost[[i, j]] + cost[[l, m]] - cost[[i, m]] - cost[[l, j]];
        report.pairs_checked += 1;
        if gap > MONOTONICITY_TOL {
            report.violations += 1;
        }
        report.max_violation = report.max_violation.max(gap);
    };
    let all_pairs = k * k.saturating_sub(1) / 2;
    if all_pairs <= trials {
        for a in 0..k {
            for b in a + 1..k {
                check(a, b);
            }
        }
    } else {
        let mut rng = seeded(seed);
        for _ in 0..trials {
            let a = rng.random_range(0..k);
            let mut b = rng.random_range(0..k - 1);
            if b >= a {
                b += 1;
            }
            check(a, b);
        }
    }
    Ok(report)
}
