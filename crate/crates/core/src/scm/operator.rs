//! Closed-form structural counterfactual operators `x ↦ T⟨s'|s⟩(x)`.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;

/// A deterministic counterfactual map between two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuralOperator {
    /// `x ↦ x + shift`.
    Translation { shift: Vec<f64> },
    /// `x ↦ ratio · x + shift`.
    ScalingTranslation { ratio: f64, shift: Vec<f64> },
    /// `(x1, x2) ↦ (x1, x2 + factor · x1²)`.
    QuadraticShear { factor: f64 },
}

impl StructuralOperator {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            StructuralOperator::Translation { shift } => x.iter().zip(shift).map(|(a, b)| a + b).collect(),
            StructuralOperator::ScalingTranslation { ratio, shift } => {
                x.iter().zip(shift).map(|(a, b)| ratio * a + b).collect()
            }
            StructuralOperator::QuadraticShear { factor } => {
                let mut out = x.to_vec();
                out[1] += factor * x[0] * x[0];
                out
            }
        }
    }

    pub fn apply_array(&self, x: &Array1<f64>) -> Array1<f64> {
        Array1::from(self.apply(x.as_slice().expect("contiguous")))
    }

    /// Applies the map to every row of `x`.
    pub fn apply_rows(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let d = x.ncols();
        let needed = match self {
            StructuralOperator::Translation { shift } | StructuralOperator::ScalingTranslation { shift, .. } => shift.len(),
            StructuralOperator::QuadraticShear { .. } => 2,
        };
        if d != needed {
            return Err(Error::DimensionMismatch(format!("operator acts on R^{needed}, points are in R^{d}")));
        }
        let mut out = Array2::zeros(x.dim());
        for (i, row) in x.rows().into_iter().enumerate() {
            let img = self.apply(&row.to_vec());
            out.row_mut(i).assign(&Array1::from(img));
        }
        Ok(out)
    }

    pub fn is_identity(&self) -> bool {
        match self {
            StructuralOperator::Translation { shift } => shift.iter().all(|&v| v == 0.0),
            StructuralOperator::ScalingTranslation { ratio, shift } => {
                *ratio == 1.0 && shift.iter().all(|&v| v == 0.0)
            }
            StructuralOperator::QuadraticShear { factor } => *factor == 0.0,
        }
    }
}

/// Parameters of the nonlinear test fixtures. `alpha` and `beta` index the
/// scaling and translation of each group.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureParams {
    #[serde(default)]
    pub alpha: BTreeMap<Group, f64>,
    #[serde(default)]
    pub beta: BTreeMap<Group, Vec<f64>>,
    /// Dimension used when `beta` is absent.
    #[serde(default)]
    pub dim: Option<usize>,
}

/// Closed-form operators of the nonlinear example models:
///
/// * `scaling_translation`: `x ↦ (α(s')/α(s)) (x − β(s)) + β(s')`, obtained by
///   inverting `X = α(S) U + β(S)`; a gradient of a convex function;
/// * `quadratic_shear`: `(x1, x2) ↦ (x1, x2 + (s' − s) x1²)`, which is not.
pub fn nonlinear_fixture_operator(
    name: &str,
    params: &FixtureParams,
    s: Group,
    s_prime: Group,
) -> Result<StructuralOperator> {
    match name {
        "scaling_translation" => {
            let alpha = |g: Group| params.alpha.get(&g).copied().unwrap_or(1.0);
            let (a, a_prime) = (alpha(s), alpha(s_prime));
            if a == 0.0 || !a.is_finite() || !a_prime.is_finite() || a_prime == 0.0 {
                return Err(Error::Config("alpha must be finite and nonzero".into()));
            }
            let dim = params
                .beta
                .values()
                .next()
                .map(Vec::len)
                .or(params.dim)
                .unwrap_or(1);
            let zero = vec![0.0; dim];
            let beta = |g: Group| params.beta.get(&g).cloned().unwrap_or_else(|| zero.clone());
            let (b, b_prime) = (beta(s), beta(s_prime));
            if b.len() != dim || b_prime.len() != dim {
                return Err(Error::DimensionMismatch("beta vectors differ in length".into()));
            }
            let ratio = a_prime / a;
            Ok(StructuralOperator::ScalingTranslation {
                ratio,
                shift: b_prime.iter().zip(&b).map(|(p, q)| p - ratio * q).collect(),
            })
        }
        "quadratic_shear" => Ok(StructuralOperator::QuadraticShear {
            factor: s_prime.value() - s.value(),
        }),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_doubles() {
        let mut params = FixtureParams::default();
        params.alpha.insert(Group(0), 1.0);
        params.alpha.insert(Group(1), 2.0);
        let op = nonlinear_fixture_operator("scaling_translation", &params, Group(0), Group(1)).unwrap();
        assert_eq!(op.apply(&[1.5]), vec![3.0]);
        assert_eq!(op.apply(&[-4.0]), vec![-8.0]);
    }

    #[test]
    fn scaling_with_translation_2d() {
        let mut params = FixtureParams::default();
        params.alpha.insert(Group(0), 2.0);
        params.alpha.insert(Group(1), 1.0);
        params.beta.insert(Group(0), vec![1.0, 1.0]);
        params.beta.insert(Group(1), vec![0.0, 3.0]);
        let op = nonlinear_fixture_operator("scaling_translation", &params, Group(0), Group(1)).unwrap();
        // (1/2)((4, 2) - (1, 1)) + (0, 3)
        assert_eq!(op.apply(&[4.0, 2.0]), vec![1.5, 3.5]);
        let back = nonlinear_fixture_operator("scaling_translation", &params, Group(1), Group(0)).unwrap();
        assert_eq!(back.apply(&op.apply(&[4.0, 2.0])), vec![4.0, 2.0]);
    }

    #[test]
    fn shear() {
        let p = FixtureParams::default();
        let op = nonlinear_fixture_operator("quadratic_shear", &p, Group(0), Group(1)).unwrap();
        assert_eq!(op.apply(&[2.0, 1.0]), vec![2.0, 5.0]);
        let same = nonlinear_fixture_operator("quadratic_shear", &p, Group(1), Group(1)).unwrap();
        assert!(same.is_identity());
        assert_eq!(same.apply(&[2.0, 1.0]), vec![2.0, 1.0]);
    }

    #[test]
    fn unknown_fixture() {
        let p = FixtureParams::default();
        assert!(matches!(
            nonlinear_fixture_operator("swirl", &p, Group(0), Group(1)),
            Err(Error::UnknownFixture(_))
        ));
    }
}
