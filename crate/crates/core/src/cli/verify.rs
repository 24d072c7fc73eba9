use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::rng::derive_seed;
use crate::scm::LinearAdditiveScm;
use crate::transport::{barycentric_map, solve_quadratic, DiscreteDistribution};

/// One sample size and seed of the map-recovery experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub n: usize,
    pub seed_index: usize,
    pub s: Group,
    pub s_prime: Group,
    /// Mean of `‖T_bary(x_i) − T*(x_i)‖` over the source atoms.
    pub mean_error: f64,
    /// Mean of `‖T*(x_i) − x_i‖`, the scale of the true map.
    pub mean_displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremSummary {
    pub n: usize,
    pub median_error: f64,
    pub median_displacement: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn row_norm_mean(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let total: f64 = a
        .rows()
        .into_iter()
        .zip(b.rows())
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
        .sum();
    total / a.nrows() as f64
}

/// Samples `n` atoms per group from `scm`, solves the quadratic transport
/// problem between them and compares its barycentric map with the structural
/// operator `T*⟨s'|s⟩` on the source atoms.
pub fn recovery_error(scm: &LinearAdditiveScm, s: Group, s_prime: Group, n: usize, seed: u64) -> Result<(f64, f64)> {
    let xs = scm.sample_group(s.value(), n, derive_seed(seed, 0))?;
    let truth = scm.structural_operator(s, s_prime).apply_rows(&xs)?;
    let displacement = row_norm_mean(&truth, &xs);
    if s == s_prime {
        // identity coupling, identity map
        return Ok((0.0, displacement));
    }
    let ys = scm.sample_group(s_prime.value(), n, derive_seed(seed, 1))?;
    let p = DiscreteDistribution::uniform(xs)?;
    let q = DiscreteDistribution::uniform(ys)?;
    let c = solve_quadratic(&p, &q)?;
    let t = barycentric_map(&c, &p, &q)?;
    Ok((row_norm_mean(t.images(), &truth), displacement))
}

/// [`recovery_error`] for every sample size and `seeds` seeds, plus an
/// `s = s'` sanity row per size. Seeds run in parallel.
pub fn verify_theorem(
    scm: &LinearAdditiveScm,
    s: Group,
    s_prime: Group,
    sizes: &[usize],
    seeds: usize,
    base_seed: u64,
) -> Result<Vec<TheoremRow>> {
    if sizes.is_empty() || seeds == 0 {
        return Err(Error::Config("need at least one sample size and one seed".into()));
    }
    if let Some(k) = scm.noise().iter().position(|spec| spec.is_degenerate()) {
        return Err(Error::Validation(format!(
            "noise of feature {} has zero variance; the group distributions have no density",
            k + 1
        )));
    }
    let mut jobs = Vec::new();
    for &n in sizes {
        for k in 0..seeds {
            jobs.push((n, k, s_prime));
        }
        jobs.push((n, 0, s));
    }
    jobs.into_par_iter()
        .map(|(n, k, target)| {
            let seed = derive_seed(derive_seed(base_seed, n as u64), k as u64);
            let (mean_error, mean_displacement) = recovery_error(scm, s, target, n, seed)?;
            Ok(TheoremRow {
                n,
                seed_index: k,
                s,
                s_prime: target,
                mean_error,
                mean_displacement,
            })
        })
        .collect()
}

/// Medians over seeds of the `s ≠ s'` rows, by sample size.
pub fn summarize(rows: &[TheoremRow]) -> Vec<TheoremSummary> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            let sel: Vec<&TheoremRow> = rows.iter().filter(|r| r.n == n && r.s != r.s_prime).collect();
            TheoremSummary {
                n,
                median_error: median(sel.iter().map(|r| r.mean_error).collect()),
                median_displacement: median(sel.iter().map(|r| r.mean_displacement).collect()),
            }
        })
        .collect()
}
