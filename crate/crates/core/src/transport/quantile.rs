use super::coupling::{Coupling, Entry};
use super::distribution::DiscreteDistribution;
use crate::error::{Error, Result};

// leftover mass below this is treated as an exhausted atom
const EXHAUST_TOL: f64 = 1e-14;

/// Monotone (north-west corner) coupling of two distributions on the real
/// line. Atoms are visited in increasing order, ties broken by index.
pub fn quantile_coupling_1d(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<Coupling> {
    if p.dim() != 1 || q.dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "quantile coupling needs 1-d atoms, got dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    let order = |d: &DiscreteDistribution| {
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by(|&a, &b| d.points()[[a, 0]].total_cmp(&d.points()[[b, 0]]).then(a.cmp(&b)));
        idx
    };
    let (pi, qi) = (order(p), order(q));
    let (a, b) = (p.weights(), q.weights());
    let mut entries = Vec::with_capacity(p.len() + q.len());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[pi[0]], b[qi[0]]);
    loop {
        let mass = ra.min(rb);
        if mass > 0.0 {
            entries.push(Entry { i: pi[i], j: qi[j], mass });
        }
        ra -= mass;
        rb -= mass;
        if ra <= EXHAUST_TOL {
            i += 1;
            if i == pi.len() {
                break;
            }
            ra = a[pi[i]];
        }
        if rb <= EXHAUST_TOL {
            j += 1;
            if j == qi.len() {
                break;
            }
            rb = b[qi[j]];
        }
    }
    Coupling::new(p.len(), q.len(), entries, a.to_vec(), b.to_vec())
}
