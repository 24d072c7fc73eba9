use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;

/// Feature map `Φ(x, s)` of a linear predictor `θᵀΦ(x, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    /// `(x, s, 1)`
    #[default]
    AugmentedIdentity,
    /// `(x, 1)`
    Unaware,
    /// `A (x, s, 1)` with `A` of shape `rows × (d + 2)`, row-major.
    Affine { rows: usize, matrix: Vec<f64> },
}

impl FeatureMap {
    /// Output dimension `p` for inputs in `R^d`.
    pub fn dim(&self, d: usize) -> Result<usize> {
        match self {
            FeatureMap::AugmentedIdentity => Ok(d + 2),
            FeatureMap::Unaware => Ok(d + 1),
            FeatureMap::Affine { rows, matrix } => {
                if matrix.len() != rows * (d + 2) {
                    return Err(Error::DimensionMismatch(format!(
                        "affine feature map has {} coefficients, expected {rows}x{}",
                        matrix.len(),
                        d + 2
                    )));
                }
                Ok(*rows)
            }
        }
    }

    /// Writes `Φ(x, s)` into `out`, which must have length `p`.
    pub fn fill(&self, x: ArrayView1<'_, f64>, s: Group, out: &mut [f64]) {
        let d = x.len();
        match self {
            FeatureMap::AugmentedIdentity => {
                out[..d].iter_mut().zip(x.iter()).for_each(|(o, v)| *o = *v);
                out[d] = s.value();
                out[d + 1] = 1.0;
            }
            FeatureMap::Unaware => {
                out[..d].iter_mut().zip(x.iter()).for_each(|(o, v)| *o = *v);
                out[d] = 1.0;
            }
            FeatureMap::Affine { rows, matrix } => {
                let width = d + 2;
                for r in 0..*rows {
                    let a = &matrix[r * width..(r + 1) * width];
                    out[r] = a[..d].iter().zip(x.iter()).map(|(c, v)| c * v).sum::<f64>() + a[d] * s.value() + a[d + 1];
                }
            }
        }
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>, s: Group) -> Result<Array1<f64>> {
        let mut out = vec![0.0; self.dim(x.len())?];
        self.fill(x, s, &mut out);
        Ok(Array1::from(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn shapes() {
        let x = array![2.0, -1.0];
        assert_eq!(FeatureMap::AugmentedIdentity.apply(x.view(), Group(1)).unwrap(), array![2.0, -1.0, 1.0, 1.0]);
        assert_eq!(FeatureMap::Unaware.apply(x.view(), Group(1)).unwrap(), array![2.0, -1.0, 1.0]);
        let a = FeatureMap::Affine {
            rows: 1,
            matrix: vec![1.0, 1.0, 10.0, 0.5],
        };
        assert_eq!(a.apply(x.view(), Group(1)).unwrap(), array![11.5]);
        assert!(a.apply(array![1.0].view(), Group(0)).is_err());
    }
}
