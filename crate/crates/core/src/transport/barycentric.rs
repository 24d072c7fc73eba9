use ndarray::{Array1, Array2, ArrayView1};

use super::coupling::Coupling;
use super::distribution::DiscreteDistribution;
use crate::error::{Error, Result};

/// `T(x_i) = Σ_j π_ij x'_j / Σ_j π_ij` on the source atoms, extended to the
/// whole space by the nearest source atom.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricMap {
    sources: Array2<f64>,
    images: Array2<f64>,
}

pub fn barycentric_map(c: &Coupling, p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<BarycentricMap> {
    if c.n_src() != p.len() || c.n_tgt() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "coupling is {}x{}, distributions have {} and {} atoms",
            c.n_src(),
            c.n_tgt(),
            p.len(),
            q.len()
        )));
    }
    let mut images = Array2::zeros((p.len(), q.dim()));
    for i in 0..p.len() {
        let row = c.row(i);
        let mass: f64 = row.iter().map(|e| e.mass).sum();
        if mass <= 0.0 {
            return Err(Error::EmptyRow(i));
        }
        let mut img = images.row_mut(i);
        for e in row {
            img.scaled_add(e.mass / mass, &q.point(e.j));
        }
    }
    Ok(BarycentricMap { sources: p.points().clone(), images })
}

impl BarycentricMap {
    pub fn sources(&self) -> &Array2<f64> {
        &self.sources
    }

    pub fn images(&self) -> &Array2<f64> {
        &self.images
    }

    /// Index of the closest source atom; the lowest index wins ties.
    pub fn nearest(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        if x.len() != self.sources.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "point in R^{}, map defined on R^{}",
                x.len(),
                self.sources.ncols()
            )));
        }
        let mut best = (f64::INFINITY, 0);
        for (i, s) in self.sources.rows().into_iter().enumerate() {
            let d: f64 = s.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best.1)
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        Ok(self.images.row(self.nearest(x)?).to_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn averages_row_targets() {
        let p = DiscreteDistribution::uniform_1d(&[0.0, 1.0]).unwrap();
        let q = DiscreteDistribution::uniform_1d(&[0.0, 0.5, 1.0]).unwrap();
        let c = super::super::quantile::quantile_coupling_1d(&p, &q).unwrap();
        let t = barycentric_map(&c, &p, &q).unwrap();
        // row 0: (1/3·0 + 1/6·0.5)/(1/2) = 1/6
        assert!((t.images()[[0, 0]] - 1.0 / 6.0).abs() < 1e-15);
        assert!((t.images()[[1, 0]] - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(t.apply(array![0.4].view()).unwrap(), t.images().row(0));
        assert_eq!(t.apply(array![0.6].view()).unwrap(), t.images().row(1));
        // equidistant: lowest index
        assert_eq!(t.nearest(array![0.5].view()).unwrap(), 0);
    }

    #[test]
    fn empty_row_is_an_error() {
        let p = DiscreteDistribution::new(array![[0.0], [1.0]], array![1.0, 0.0]).unwrap();
        let q = DiscreteDistribution::uniform_1d(&[2.0]).unwrap();
        let c = Coupling::new(
            2,
            1,
            vec![super::super::coupling::Entry { i: 0, j: 0, mass: 1.0 }],
            vec![1.0, 0.0],
            vec![1.0],
        )
        .unwrap();
        assert!(matches!(barycentric_map(&c, &p, &q), Err(Error::EmptyRow(1))));
    }
}
