//! Exhaustive reference solvers for small transport problems. They share no
//! code with the network simplex and serve as its testing oracle.

use ndarray::Array2;

use super::coupling::{Coupling, Entry};
use super::distribution::DiscreteDistribution;
use crate::error::{Error, Result};

const MAX_ASSIGNMENT: usize = 6;
const MAX_POLYTOPE_ARCS: usize = 12;

/// Globally optimal coupling by enumeration: all permutations when the
/// problem is a uniform assignment with `n = m ≤ 6`, otherwise all vertices
/// of the transportation polytope when `n·m ≤ 12`.
pub fn brute_force_coupling(p: &DiscreteDistribution, q: &DiscreteDistribution, cost: &Array2<f64>) -> Result<Coupling> {
    let (n, m) = (p.len(), q.len());
    if cost.dim() != (n, m) {
        return Err(Error::DimensionMismatch(format!("cost matrix is {:?}, expected ({n}, {m})", cost.dim())));
    }
    let a = p.weights().to_vec();
    let b = q.weights().to_vec();
    let uniform = |w: &[f64]| w.iter().all(|&x| (x - 1.0 / w.len() as f64).abs() <= 1e-12);
    if n == m && n <= MAX_ASSIGNMENT && uniform(&a) && uniform(&b) {
        let perm = best_permutation(cost);
        let entries = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| Entry { i, j, mass: 1.0 / n as f64 })
            .collect();
        return Coupling::new(n, m, entries, a, b);
    }
    if n * m <= MAX_POLYTOPE_ARCS {
        return best_vertex(&a, &b, cost);
    }
    Err(Error::TooLarge { n, m })
}

/// Lexicographically first permutation of minimal cost.
fn best_permutation(cost: &Array2<f64>) -> Vec<usize> {
    fn recurse(
        cost: &Array2<f64>,
        row: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<usize>,
        acc: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        let n = cost.nrows();
        if row == n {
            if acc < best.0 {
                *best = (acc, current.clone());
            }
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                current.push(j);
                recurse(cost, row + 1, used, current, acc + cost[[row, j]], best);
                current.pop();
                used[j] = false;
            }
        }
    }
    let n = cost.nrows();
    let mut best = (f64::INFINITY, Vec::new());
    recurse(cost, 0, &mut vec![false; n], &mut Vec::with_capacity(n), 0.0, &mut best);
    best.1
}

/// Minimum over basic feasible solutions: every subset of `n + m − 1` arcs
/// that spans the bipartite graph determines a unique flow.
fn best_vertex(a: &[f64], b: &[f64], cost: &Array2<f64>) -> Result<Coupling> {
    let (n, m) = (a.len(), b.len());
    let arcs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let k = n + m - 1;
    type Support = Vec<(usize, usize, f64)>;
    let mut best: Option<(f64, Support)> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let chosen: Vec<(usize, usize)> = subset.iter().map(|&e| arcs[e]).collect();
        if let Some(flows) = tree_flows(a, b, &chosen) {
            if flows.iter().all(|&f| f >= -1e-12) {
                let total: f64 = chosen.iter().zip(&flows).map(|(&(i, j), f)| f * cost[[i, j]]).sum();
                if best.as_ref().is_none_or(|(c, _)| total < *c - 1e-15) {
                    let support = chosen
                        .iter()
                        .zip(&flows)
                        .filter(|(_, &f)| f > 1e-15)
                        .map(|(&(i, j), &f)| (i, j, f))
                        .collect();
                    best = Some((total, support));
                }
            }
        }
        if !next_combination(&mut subset, arcs.len()) {
            break;
        }
    }
    let (_, support) = best.ok_or_else(|| Error::InfeasibleWeights {
        src: a.iter().sum(),
        tgt: b.iter().sum(),
    })?;
    let entries = support.into_iter().map(|(i, j, mass)| Entry { i, j, mass }).collect();
    Coupling::new(n, m, entries, a.to_vec(), b.to_vec())
}

fn next_combination(subset: &mut [usize], universe: usize) -> bool {
    let k = subset.len();
    for pos in (0..k).rev() {
        if subset[pos] < universe - k + pos {
            subset[pos] += 1;
            for next in pos + 1..k {
                subset[next] = subset[next - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Flows on a spanning tree of the bipartite graph, by peeling leaves.
/// Returns `None` if the arcs do not form a spanning tree.
fn tree_flows(a: &[f64], b: &[f64], arcs: &[(usize, usize)]) -> Option<Vec<f64>> {
    let (n, m) = (a.len(), b.len());
    let mut residual: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut degree = vec![0usize; n + m];
    for &(i, j) in arcs {
        degree[i] += 1;
        degree[n + j] += 1;
    }
    let mut flows = vec![f64::NAN; arcs.len()];
    let mut done = vec![false; arcs.len()];
    for _ in 0..arcs.len() {
        // any unresolved arc touching a leaf
        let (e, leaf) = arcs.iter().enumerate().find_map(|(e, &(i, j))| {
            if done[e] {
                None
            } else if degree[i] == 1 {
                Some((e, i))
            } else if degree[n + j] == 1 {
                Some((e, n + j))
            } else {
                None
            }
        })?;
        let (i, j) = arcs[e];
        let other = if leaf == i { n + j } else { i };
        let f = residual[leaf];
        flows[e] = f;
        done[e] = true;
        residual[leaf] = 0.0;
        residual[other] -= f;
        degree[i] -= 1;
        degree[n + j] -= 1;
    }
    // a spanning tree leaves every node covered and balanced
    if residual.iter().all(|r| r.abs() <= 1e-12) && flows.iter().all(|f| f.is_finite()) {
        Some(flows)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::cost::sq_euclidean_cost;
    use ndarray::array;

    #[test]
    fn single_atom() {
        let p = DiscreteDistribution::uniform_1d(&[2.0]).unwrap();
        let q = DiscreteDistribution::uniform_1d(&[5.0]).unwrap();
        let c = brute_force_coupling(&p, &q, &sq_euclidean_cost(&p, &q).unwrap()).unwrap();
        assert_eq!(c.to_dense(), array![[1.0]]);
    }

    #[test]
    fn assignment_picks_sorted_matching_in_1d() {
        let p = DiscreteDistribution::uniform_1d(&[0.3, -1.2, 2.0]).unwrap();
        let q = DiscreteDistribution::uniform_1d(&[1.0, 5.0, -3.0]).unwrap();
        let c = brute_force_coupling(&p, &q, &sq_euclidean_cost(&p, &q).unwrap()).unwrap();
        // sorted order: p = (1, 0, 2), q = (2, 0, 1)
        let pairs: Vec<(usize, usize)> = c.entries().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 2), (2, 1)]);
    }

    #[test]
    fn polytope_vertices_for_unequal_sizes() {
        let p = DiscreteDistribution::uniform_1d(&[0.0]).unwrap();
        let q = DiscreteDistribution::uniform_1d(&[1.0, 3.0]).unwrap();
        let cost = sq_euclidean_cost(&p, &q).unwrap();
        let c = brute_force_coupling(&p, &q, &cost).unwrap();
        assert_eq!(c.cost(&cost).unwrap(), 5.0);

        // 3x4 weighted instance, optimum 2.25
        let p = DiscreteDistribution::new(array![[0.0], [1.0], [2.0]], array![0.2, 0.3, 0.5]).unwrap();
        let q = DiscreteDistribution::new(array![[0.0], [1.0], [2.0], [3.0]], array![0.4, 0.1, 0.25, 0.25]).unwrap();
        let cost = array![[3.0, 1.0, 7.0, 4.0], [2.0, 6.0, 5.0, 9.0], [8.0, 3.0, 3.0, 2.0]];
        let c = brute_force_coupling(&p, &q, &cost).unwrap();
        assert!((c.cost(&cost).unwrap() - 2.25).abs() < 1e-12);
        assert!(c.is_feasible());
    }

    #[test]
    fn too_large() {
        let p = DiscreteDistribution::uniform_1d(&[0.0; 7]).unwrap();
        let cost = Array2::zeros((7, 7));
        assert!(matches!(brute_force_coupling(&p, &p, &cost), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn combinations_enumerated() {
        let mut s = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut s, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
    }
}
