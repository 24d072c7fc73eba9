use std::fmt::Write as _;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Tolerance on coupling marginals.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Masses below this are pruned from solver output.
pub const PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// A sparse transport plan between two discrete distributions.
///
/// Entries are kept sorted by `(i, j)` with strictly positive masses, and the
/// declared marginals travel with the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    n_src: usize,
    n_tgt: usize,
    entries: Vec<Entry>,
    row_start: Vec<usize>,
    src_weights: Vec<f64>,
    tgt_weights: Vec<f64>,
}

impl Coupling {
    pub fn new(
        n_src: usize,
        n_tgt: usize,
        mut entries: Vec<Entry>,
        src_weights: Vec<f64>,
        tgt_weights: Vec<f64>,
    ) -> Result<Self> {
        if src_weights.len() != n_src || tgt_weights.len() != n_tgt {
            return Err(Error::DimensionMismatch(format!(
                "coupling is {n_src}x{n_tgt} but marginals have {} and {} entries",
                src_weights.len(),
                tgt_weights.len()
            )));
        }
        for e in &entries {
            if e.i >= n_src || e.j >= n_tgt {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({}, {}) outside {n_src}x{n_tgt}",
                    e.i, e.j
                )));
            }
            if !(e.mass > 0.0 && e.mass.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "entry ({}, {}) has mass {}",
                    e.i, e.j, e.mass
                )));
            }
        }
        entries.sort_by_key(|e| (e.i, e.j));
        if entries.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::InvalidDistribution("duplicate coupling entry".into()));
        }
        let mut row_start = vec![0; n_src + 1];
        for e in &entries {
            row_start[e.i + 1] += 1;
        }
        for i in 0..n_src {
            row_start[i + 1] += row_start[i];
        }
        Ok(Coupling {
            n_src,
            n_tgt,
            entries,
            row_start,
            src_weights,
            tgt_weights,
        })
    }

    /// Marginals are taken from the row and column sums.
    pub fn from_triplets(n_src: usize, n_tgt: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows = vec![0.0; n_src];
        let mut cols = vec![0.0; n_tgt];
        for &(i, j, mass) in triplets {
            if i < n_src && j < n_tgt {
                rows[i] += mass;
                cols[j] += mass;
            }
        }
        let entries = triplets.iter().map(|&(i, j, mass)| Entry { i, j, mass }).collect();
        Self::new(n_src, n_tgt, entries, rows, cols)
    }

    /// `(I × I)♯ μ`: every atom paired with itself.
    pub fn identity(weights: &[f64]) -> Self {
        let entries = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| Entry { i, j: i, mass: w })
            .collect();
        Self::new(weights.len(), weights.len(), entries, weights.to_vec(), weights.to_vec()).expect("valid identity")
    }

    /// The independent coupling `P ⊗ Q`.
    pub fn product(src_weights: &[f64], tgt_weights: &[f64]) -> Self {
        let mut entries = Vec::new();
        for (i, &a) in src_weights.iter().enumerate() {
            for (j, &b) in tgt_weights.iter().enumerate() {
                if a * b > 0.0 {
                    entries.push(Entry { i, j, mass: a * b });
                }
            }
        }
        Self::new(
            src_weights.len(),
            tgt_weights.len(),
            entries,
            src_weights.to_vec(),
            tgt_weights.to_vec(),
        )
        .expect("valid product")
    }

    /// `t♯π`: swaps the roles of source and target.
    pub fn transpose(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| Entry {
                i: e.j,
                j: e.i,
                mass: e.mass,
            })
            .collect();
        Self::new(
            self.n_tgt,
            self.n_src,
            entries,
            self.tgt_weights.clone(),
            self.src_weights.clone(),
        )
        .expect("transpose of a valid coupling")
    }

    pub fn n_src(&self) -> usize {
        self.n_src
    }

    pub fn n_tgt(&self) -> usize {
        self.n_tgt
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn src_weights(&self) -> &[f64] {
        &self.src_weights
    }

    pub fn tgt_weights(&self) -> &[f64] {
        &self.tgt_weights
    }

    pub fn row(&self, i: usize) -> &[Entry] {
        &self.entries[self.row_start[i]..self.row_start[i + 1]]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_src];
        for e in &self.entries {
            sums[e.i] += e.mass;
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_tgt];
        for e in &self.entries {
            sums[e.j] += e.mass;
        }
        sums
    }

    /// Largest absolute deviation of row and column sums from the declared
    /// marginals.
    pub fn marginal_residual(&self) -> (f64, f64) {
        let dev = |sums: Vec<f64>, w: &[f64]| sums.iter().zip(w).map(|(s, w)| (s - w).abs()).fold(0.0, f64::max);
        (
            dev(self.row_sums(), &self.src_weights),
            dev(self.col_sums(), &self.tgt_weights),
        )
    }

    pub fn is_feasible(&self) -> bool {
        let (r, c) = self.marginal_residual();
        r <= MARGINAL_TOL && c <= MARGINAL_TOL
    }

    /// Every row carries at most one entry.
    pub fn is_deterministic(&self) -> bool {
        (0..self.n_src).all(|i| self.row(i).len() <= 1)
    }

    pub fn cost(&self, cost: &Array2<f64>) -> Result<f64> {
        if cost.dim() != (self.n_src, self.n_tgt) {
            return Err(Error::DimensionMismatch(format!(
                "cost matrix is {:?}, coupling is {}x{}",
                cost.dim(),
                self.n_src,
                self.n_tgt
            )));
        }
        Ok(self.entries.iter().map(|e| e.mass * cost[[e.i, e.j]]).sum())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_src, self.n_tgt));
        for e in &self.entries {
            out[[e.i, e.j]] = e.mass;
        }
        out
    }

    /// Drops entries below `threshold`, moving their mass onto the largest
    /// remaining entry of the same row.
    pub fn prune(&self, threshold: f64) -> Self {
        let mut kept = Vec::with_capacity(self.entries.len());
        for i in 0..self.n_src {
            let row = self.row(i);
            let small: f64 = row.iter().filter(|e| e.mass < threshold).map(|e| e.mass).sum();
            let mut big: Vec<Entry> = row.iter().filter(|e| e.mass >= threshold).copied().collect();
            if small > 0.0 {
                if let Some(top) = big
                    .iter_mut()
                    .max_by(|a, b| a.mass.total_cmp(&b.mass).then(b.j.cmp(&a.j)))
                {
                    top.mass += small;
                } else {
                    // the whole row is tiny; keep it as is
                    big = row.to_vec();
                }
            }
            kept.extend(big);
        }
        Self::new(
            self.n_src,
            self.n_tgt,
            kept,
            self.src_weights.clone(),
            self.tgt_weights.clone(),
        )
        .expect("pruned coupling stays valid")
    }

    /// Text form: header `n_src,n_tgt`, then one `i,j,mass` line per entry,
    /// masses printed with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{},{}\n", self.n_src, self.n_tgt);
        for e in &self.entries {
            writeln!(out, "{},{},{:.16e}", e.i, e.j, e.mass).expect("string write");
        }
        out
    }

    /// Parses [`Coupling::to_text`] output. Marginals are the row and column
    /// sums of the entries.
    pub fn from_text(text: &str) -> Result<Self> {
        let (n_src, n_tgt, triplets) = parse_triplets(text)?;
        Self::from_triplets(n_src, n_tgt, &triplets)
    }

    /// Parses the text form and attaches known marginals.
    pub fn from_text_with_marginals(text: &str, src_weights: Vec<f64>, tgt_weights: Vec<f64>) -> Result<Self> {
        let (n_src, n_tgt, triplets) = parse_triplets(text)?;
        let entries = triplets.into_iter().map(|(i, j, mass)| Entry { i, j, mass }).collect();
        Self::new(n_src, n_tgt, entries, src_weights, tgt_weights)
    }
}

type Triplets = (usize, usize, Vec<(usize, usize, f64)>);

fn parse_triplets(text: &str) -> Result<Triplets> {
    let bad = |line: usize, what: &str| Error::ParseFailure(format!("coupling line {}: {what}", line + 1));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(0, "missing header"))?;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 2 {
        return Err(bad(0, "header must be `n_src,n_tgt`"));
    }
    let n_src = dims[0].trim().parse().map_err(|_| bad(0, "bad n_src"))?;
    let n_tgt = dims[1].trim().parse().map_err(|_| bad(0, "bad n_tgt"))?;
    let mut triplets = Vec::new();
    for (k, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad(k, "expected `i,j,mass`"));
        }
        let i = f[0].trim().parse().map_err(|_| bad(k, "bad source index"))?;
        let j = f[1].trim().parse().map_err(|_| bad(k, "bad target index"))?;
        let mass = f[2].trim().parse().map_err(|_| bad(k, "bad mass"))?;
        triplets.push((i, j, mass));
    }
    Ok((n_src, n_tgt, triplets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_product() {
        let id = Coupling::identity(&[0.5, 0.5]);
        assert_eq!(id.nnz(), 2);
        assert!(id.is_deterministic() && id.is_feasible());
        let prod = Coupling::product(&[0.5, 0.5], &[0.25, 0.75]);
        assert_eq!(prod.nnz(), 4);
        assert!(prod.is_feasible());
        assert_eq!(prod.row(1)[1].mass, 0.375);
    }

    #[test]
    fn rejects_bad_entries() {
        let e = |i, j, mass| Entry { i, j, mass };
        assert!(Coupling::new(1, 1, vec![e(0, 1, 1.0)], vec![1.0], vec![1.0]).is_err());
        assert!(Coupling::new(1, 1, vec![e(0, 0, 0.0)], vec![1.0], vec![1.0]).is_err());
        assert!(Coupling::new(1, 1, vec![e(0, 0, 0.5), e(0, 0, 0.5)], vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn prune_moves_dust_to_largest_entry() {
        let c = Coupling::from_triplets(2, 2, &[(0, 0, 0.5 - 1e-14), (0, 1, 1e-14), (1, 1, 0.5)]).unwrap();
        let p = c.prune(PRUNE_TOL);
        assert_eq!(p.nnz(), 2);
        assert_eq!(p.row(0), &[Entry { i: 0, j: 0, mass: 0.5 }]);
    }

    #[test]
    fn text_format() {
        let c = Coupling::from_triplets(1, 2, &[(0, 0, 0.5), (0, 1, 0.5)]).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("1,2\n0,0,5.0000000000000000e-1\n"));
        assert!(Coupling::from_text("1\n").is_err());
        assert!(Coupling::from_text("1,1\n0,0\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(masses in prop::collection::vec(1e-300f64..1e3, 1..20)) {
            let triplets: Vec<(usize, usize, f64)> =
                masses.iter().enumerate().map(|(k, &m)| (k % 5, k, m / 7.0)).collect();
            let c = Coupling::from_triplets(5, masses.len(), &triplets).unwrap();
            let back = Coupling::from_text_with_marginals(
                &c.to_text(), c.src_weights().to_vec(), c.tgt_weights().to_vec()).unwrap();
            prop_assert_eq!(back, c);
        }

        #[test]
        fn transpose_is_involutive(masses in prop::collection::vec(0.01f64..1.0, 1..12)) {
            let triplets: Vec<(usize, usize, f64)> =
                masses.iter().enumerate().map(|(k, &m)| (k / 3, k % 4, m)).collect();
            let mut dedup = triplets.clone();
            dedup.sort_by_key(|t| (t.0, t.1));
            dedup.dedup_by_key(|t| (t.0, t.1));
            let c = Coupling::from_triplets(4, 4, &dedup).unwrap();
            prop_assert_eq!(c.transpose().transpose(), c.clone());
            prop_assert_eq!(c.transpose().to_dense(), c.to_dense().t().to_owned());
        }
    }
}
