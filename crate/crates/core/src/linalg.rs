//! Small dense linear algebra for the d×d systems that show up in
//! linear-additive models. Dimensions are tiny, so plain Gaussian
//! elimination with partial pivoting is enough.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// LU factorization with partial pivoting, stored in place.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Array2<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pivot = k;
            let mut best = lu[[k, k]].abs();
            for r in k + 1..n {
                let v = lu[[r, k]].abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix(f64::INFINITY));
            }
            if pivot != k {
                for c in 0..n {
                    lu.swap([k, c], [pivot, c]);
                }
                perm.swap(k, pivot);
            }
            let diag = lu[[k, k]];
            for r in k + 1..n {
                let factor = lu[[r, k]] / diag;
                lu[[r, k]] = factor;
                for c in k + 1..n {
                    lu[[r, c]] -= factor * lu[[k, c]];
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.lu.nrows();
        let mut x: Array1<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut acc = x[r];
            for c in 0..r {
                acc -= self.lu[[r, c]] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in r + 1..n {
                acc -= self.lu[[r, c]] * x[c];
            }
            x[r] = acc / self.lu[[r, r]];
        }
        x
    }

    pub fn inverse(&self) -> Array2<f64> {
        let n = self.lu.nrows();
        let mut inv = Array2::zeros((n, n));
        for c in 0..n {
            let mut e = Array1::zeros(n);
            e[c] = 1.0;
            inv.column_mut(c).assign(&self.solve(&e));
        }
        inv
    }
}

fn norm_one(a: &Array2<f64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|col| col.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts `a`, rejecting matrices whose 1-norm condition number is not
/// finite or exceeds [`MAX_CONDITION`].
pub fn checked_inverse(a: &Array2<f64>) -> Result<Array2<f64>> {
    let inv = Lu::factor(a)?.inverse();
    let cond = norm_one(a) * norm_one(&inv);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularMatrix(cond));
    }
    Ok(inv)
}

/// Least-squares solution of `x θ ≈ y` through the normal equations.
pub fn least_squares(x: &Array2<f64>, y: &Array1<f64>) -> Result<Array1<f64>> {
    let gram = x.t().dot(x);
    let rhs = x.t().dot(y);
    Ok(Lu::factor(&gram)?.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn inverse_of_lower_triangular_shear() {
        let a = array![[1.0, 0.0], [-0.5, 1.0]];
        let inv = checked_inverse(&a).unwrap();
        assert_eq!(inv, array![[1.0, 0.0], [0.5, 1.0]]);
    }

    #[test]
    fn singular_rejected() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(checked_inverse(&a), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn solve_with_pivoting() {
        let a = array![[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        let b = array![5.0, 3.0, 6.0];
        let x = Lu::factor(&a).unwrap().solve(&b);
        let back = a.dot(&x);
        for k in 0..3 {
            assert!((back[k] - b[k]).abs() < 1e-12);
        }
    }
}
