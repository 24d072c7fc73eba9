use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::GroupedData;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::transport::{Coupling, MARGINAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    OtQuadratic,
    ScmLinearAdditive,
    Fairwash,
    Custom,
}

/// A family of couplings `π⟨s'|s⟩` indexed by ordered pairs of groups.
///
/// Coupling `(s, s')` has the atoms of group `s` as sources. Its targets are
/// the atoms of group `s'`, unless mapped target points were supplied for the
/// pair (models built from a structural operator carry the images of the
/// source atoms instead).
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualModel {
    kind: ModelKind,
    data: GroupedData,
    couplings: BTreeMap<(Group, Group), Coupling>,
    targets: BTreeMap<(Group, Group), Array2<f64>>,
}

impl CounterfactualModel {
    /// Checks shapes only; use [`CounterfactualModel::validate`] for the
    /// coupling invariants.
    pub fn new(
        kind: ModelKind,
        data: GroupedData,
        couplings: BTreeMap<(Group, Group), Coupling>,
        targets: BTreeMap<(Group, Group), Array2<f64>>,
    ) -> Result<Self> {
        for (&(s, t), pts) in &targets {
            if !couplings.contains_key(&(s, t)) {
                return Err(Error::Validation(format!("mapped targets for {s}->{t} without a coupling")));
            }
            if pts.ncols() != data.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "mapped targets for {s}->{t} live in R^{}, data in R^{}",
                    pts.ncols(),
                    data.dim()
                )));
            }
        }
        let model = CounterfactualModel { kind, data, couplings, targets };
        for (&(s, t), c) in &model.couplings {
            let n_src = model.data.group(s)?.len();
            let n_tgt = model.target_points(s, t)?.nrows();
            if (c.n_src(), c.n_tgt()) != (n_src, n_tgt) {
                return Err(Error::DimensionMismatch(format!(
                    "coupling {s}->{t} is {}x{}, expected {n_src}x{n_tgt}",
                    c.n_src(),
                    c.n_tgt()
                )));
            }
        }
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn data(&self) -> &GroupedData {
        &self.data
    }

    pub fn groups(&self) -> Vec<Group> {
        self.data.labels()
    }

    pub fn couplings(&self) -> &BTreeMap<(Group, Group), Coupling> {
        &self.couplings
    }

    pub fn mapped_targets(&self) -> &BTreeMap<(Group, Group), Array2<f64>> {
        &self.targets
    }

    pub fn coupling(&self, s: Group, s_prime: Group) -> Result<&Coupling> {
        self.data.group(s)?;
        self.data.group(s_prime)?;
        self.couplings
            .get(&(s, s_prime))
            .ok_or_else(|| Error::Validation(format!("model has no coupling {s}->{s_prime}")))
    }

    /// Target atoms of coupling `(s, s')`.
    pub fn target_points(&self, s: Group, s_prime: Group) -> Result<&Array2<f64>> {
        match self.targets.get(&(s, s_prime)) {
            Some(pts) => Ok(pts),
            None => Ok(self.data.group(s_prime)?.points()),
        }
    }

    /// Target weights the coupling must reproduce: the pushforward of `μ_s`
    /// for mapped targets, `μ_{s'}` otherwise.
    pub fn target_weights(&self, s: Group, s_prime: Group) -> Result<Vec<f64>> {
        if self.targets.contains_key(&(s, s_prime)) {
            Ok(self.data.group(s)?.weights().to_vec())
        } else {
            Ok(self.data.group(s_prime)?.weights().to_vec())
        }
    }

    /// Row `i` of coupling `(s, s')`, normalized to a probability vector over
    /// target atoms. Returned as `(target index, weight)` pairs.
    pub fn counterpart_distribution(&self, s: Group, i: usize, s_prime: Group) -> Result<Vec<(usize, f64)>> {
        let mu = self.data.group(s)?;
        let c = self.coupling(s, s_prime)?;
        if i >= mu.len() || !(mu.weights()[i] > 0.0) {
            return Err(Error::UnknownAtom { group: s.0, index: i });
        }
        let row = c.row(i);
        let mass: f64 = row.iter().map(|e| e.mass).sum();
        if !(mass > 0.0) {
            return Err(Error::EmptyRow(i));
        }
        Ok(row.iter().map(|e| (e.j, e.mass / mass)).collect())
    }

    pub fn is_deterministic(&self) -> bool {
        self.couplings.values().all(Coupling::is_deterministic)
    }

    pub fn insert_coupling(&mut self, s: Group, s_prime: Group, c: Coupling) {
        self.couplings.insert((s, s_prime), c);
    }

    pub fn remove_coupling(&mut self, s: Group, s_prime: Group) -> Option<Coupling> {
        self.couplings.remove(&(s, s_prime))
    }

    /// Checks that every coupling has the model's marginals, that diagonal
    /// couplings are identity pairings, and that `(s, s')` is the exact
    /// transpose of `(s', s)`. The transpose check applies only to pairs
    /// whose targets are the observed atoms of the other group.
    pub fn validate(&self) -> ValidationReport {
        let labels = self.groups();
        let mut r = ValidationReport::default();
        for &s in &labels {
            for &t in &labels {
                let Some(c) = self.couplings.get(&(s, t)) else {
                    r.missing_pairs.push((s, t));
                    continue;
                };
                let src = self.data.group(s).expect("known group").weights();
                let tgt = self.target_weights(s, t).expect("known group");
                let rows = c.row_sums();
                let cols = c.col_sums();
                let dev = rows
                    .iter()
                    .zip(src.iter())
                    .chain(cols.iter().zip(tgt.iter()))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                r.max_marginal_residual = r.max_marginal_residual.max(dev);
                if dev > MARGINAL_TOL {
                    r.marginal_failures.push((s, t));
                }
                if s == t {
                    let mut diag_dev: f64 = 0.0;
                    let mut on_diag = vec![0.0; c.n_src()];
                    for e in c.entries() {
                        if e.i == e.j {
                            on_diag[e.i] = e.mass;
                        } else {
                            diag_dev = diag_dev.max(e.mass);
                        }
                    }
                    for (m, w) in on_diag.iter().zip(src.iter()) {
                        diag_dev = diag_dev.max((m - w).abs());
                    }
                    if c.n_tgt() != c.n_src() {
                        diag_dev = f64::INFINITY;
                    }
                    r.max_diagonal_residual = r.max_diagonal_residual.max(diag_dev);
                    if diag_dev > MARGINAL_TOL {
                        r.diagonal_failures.push(s);
                    }
                } else if s < t && !self.targets.contains_key(&(s, t)) && !self.targets.contains_key(&(t, s)) {
                    if let Some(back) = self.couplings.get(&(t, s)) {
                        r.transpose_checked += 1;
                        if c.entries() != back.transpose().entries() || c.n_src() != back.n_tgt() {
                            r.transpose_failures.push((s, t));
                        }
                    }
                }
            }
        }
        r.passed = r.missing_pairs.is_empty()
            && r.marginal_failures.is_empty()
            && r.diagonal_failures.is_empty()
            && r.transpose_failures.is_empty();
        r
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub max_marginal_residual: f64,
    pub max_diagonal_residual: f64,
    pub transpose_checked: usize,
    pub missing_pairs: Vec<(Group, Group)>,
    pub marginal_failures: Vec<(Group, Group)>,
    pub diagonal_failures: Vec<Group>,
    pub transpose_failures: Vec<(Group, Group)>,
}
