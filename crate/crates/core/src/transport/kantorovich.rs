use ndarray::Array2;

use super::coupling::{Coupling, Entry, PRUNE_TOL};
use super::distribution::DiscreteDistribution;
use super::simplex::solve_transport;
use crate::error::{Error, Result};

/// Optimal coupling of `p` and `q` for the given cost matrix, solved exactly
/// by network simplex. The output is a basic solution with at most
/// `n + m − 1` entries.
pub fn solve_kantorovich(p: &DiscreteDistribution, q: &DiscreteDistribution, cost: &Array2<f64>) -> Result<Coupling> {
    if cost.dim() != (p.len(), q.len()) {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix is {:?}, distributions have {} and {} atoms",
            cost.dim(),
            p.len(),
            q.len()
        )));
    }
    let a = p.weights().as_slice().expect("contiguous");
    let b = q.weights().as_slice().expect("contiguous");
    let sol = solve_transport(a, b, cost)?;
    let entries = sol.entries.into_iter().map(|(i, j, mass)| Entry { i, j, mass }).collect();
    Ok(Coupling::new(p.len(), q.len(), entries, a.to_vec(), b.to_vec())?.prune(PRUNE_TOL))
}

/// [`solve_kantorovich`] under the squared Euclidean cost.
pub fn solve_quadratic(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<Coupling> {
    let cost = super::cost::sq_euclidean_cost(p, q)?;
    solve_kantorovich(p, q, &cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::cost::sq_euclidean_cost;
    use ndarray::array;

    #[test]
    fn identical_marginals_give_identity() {
        let p = DiscreteDistribution::uniform(array![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let cost = sq_euclidean_cost(&p, &p).unwrap();
        let c = solve_kantorovich(&p, &p, &cost).unwrap();
        assert_eq!(c, Coupling::identity(&[0.5, 0.5]));
        assert_eq!(c.cost(&cost).unwrap(), 0.0);
    }

    #[test]
    fn forced_split() {
        let p = DiscreteDistribution::uniform_1d(&[0.0]).unwrap();
        let q = DiscreteDistribution::uniform_1d(&[1.0, 3.0]).unwrap();
        let cost = sq_euclidean_cost(&p, &q).unwrap();
        let c = solve_kantorovich(&p, &q, &cost).unwrap();
        assert_eq!(c.to_dense(), array![[0.5, 0.5]]);
        assert_eq!(c.cost(&cost).unwrap(), 5.0);
    }

    #[test]
    fn monotone_matching_beats_crossing() {
        // the two permutation couplings cost 100 (sorted) and 101 (crossed)
        let p = DiscreteDistribution::uniform_1d(&[0.0, 1.0]).unwrap();
        let q = DiscreteDistribution::uniform_1d(&[10.0, 11.0]).unwrap();
        let cost = sq_euclidean_cost(&p, &q).unwrap();
        let c = solve_kantorovich(&p, &q, &cost).unwrap();
        assert_eq!(c.to_dense(), array![[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!(c.cost(&cost).unwrap(), 100.0);
        let crossed = Coupling::from_triplets(2, 2, &[(0, 1, 0.5), (1, 0, 0.5)]).unwrap();
        assert_eq!(crossed.cost(&cost).unwrap(), 101.0);
    }

    #[test]
    fn wrong_cost_shape() {
        let p = DiscreteDistribution::uniform_1d(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            solve_kantorovich(&p, &p, &Array2::zeros((2, 3))),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
