use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::rng::{chunk_rng, derive_seed, CHUNK};
use crate::scm::{LinearAdditiveScm, NoiseSpec};

/// `y = aᵀx + c·s + intercept + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub a: Vec<f64>,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub intercept: f64,
    #[serde(default = "no_noise")]
    pub noise: NoiseSpec,
}

fn no_noise() -> NoiseSpec {
    NoiseSpec::Constant { value: 0.0 }
}

/// Regression data drawn from a linear additive model.
pub fn synth_linear(scm: &LinearAdditiveScm, outcome: &OutcomeSpec, n: usize, seed: u64) -> Result<Dataset> {
    let d = scm.dim();
    if outcome.a.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "outcome has {} coefficients for {d} features",
            outcome.a.len()
        )));
    }
    outcome.noise.validate()?;
    let (x, s) = scm.sample(n, seed)?;
    let groups: Vec<Group> = s.iter().map(|&v| Group::from_value(v)).collect::<Result<_>>()?;
    let noise_seed = derive_seed(seed, 1);
    let a = Array1::from(outcome.a.clone());
    let mut y = Array1::zeros(n);
    for (c, chunk) in y.as_slice_mut().expect("contiguous").chunks_mut(CHUNK).enumerate() {
        let mut rng = chunk_rng(noise_seed, c);
        for (k, yi) in chunk.iter_mut().enumerate() {
            let i = c * CHUNK + k;
            *yi = a.dot(&x.row(i)) + outcome.c * s[i] + outcome.intercept + outcome.noise.sample(&mut rng);
        }
    }
    let columns = (1..=d).map(|k| format!("x{k}")).collect();
    Dataset::new(x, groups, y, columns, Task::Regression)
}

/// [`synth_linear`] with the target thresholded at its median.
pub fn synth_linear_classification(scm: &LinearAdditiveScm, outcome: &OutcomeSpec, n: usize, seed: u64) -> Result<Dataset> {
    let reg = synth_linear(scm, outcome, n, seed)?;
    let med = median(reg.y().as_slice().expect("contiguous"));
    let labels = reg.y().mapv(|v| if v > med { 1.0 } else { 0.0 });
    reg.with_targets(labels, Task::Classification)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
