use std::collections::BTreeMap;

use ndarray::Axis;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::transport::{DiscreteDistribution, MASS_TOL};

/// Per-group empirical measures `μ_s^n` and group shares `n_s / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData {
    groups: BTreeMap<Group, DiscreteDistribution>,
    shares: BTreeMap<Group, f64>,
}

impl GroupedData {
    pub fn new(groups: BTreeMap<Group, DiscreteDistribution>, shares: BTreeMap<Group, f64>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::GroupCount {
                expected: "at least 1".into(),
                found: 0,
            });
        }
        if !groups.keys().eq(shares.keys()) {
            return Err(Error::Validation("groups and shares have different labels".into()));
        }
        let dims: Vec<usize> = groups.values().map(DiscreteDistribution::dim).collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::DimensionMismatch(format!("groups live in dimensions {dims:?}")));
        }
        let total: f64 = shares.values().sum();
        if shares.values().any(|&p| !(p > 0.0)) || (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Validation(format!("group shares must be positive and sum to 1, got {total}")));
        }
        Ok(GroupedData { groups, shares })
    }

    /// Uniform empirical measures, atoms in dataset row order.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        let n = data.n() as f64;
        let mut groups = BTreeMap::new();
        let mut shares = BTreeMap::new();
        for (g, rows) in data.group_rows() {
            groups.insert(g, DiscreteDistribution::uniform(data.x().select(Axis(0), &rows))?);
            shares.insert(g, rows.len() as f64 / n);
        }
        Self::new(groups, shares)
    }

    pub fn labels(&self) -> Vec<Group> {
        self.groups.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.groups.values().next().map(DiscreteDistribution::dim).unwrap_or(0)
    }

    pub fn group(&self, s: Group) -> Result<&DiscreteDistribution> {
        self.groups.get(&s).ok_or(Error::UnknownGroup(s.0))
    }

    pub fn share(&self, s: Group) -> Result<f64> {
        self.shares.get(&s).copied().ok_or(Error::UnknownGroup(s.0))
    }

    pub fn groups(&self) -> &BTreeMap<Group, DiscreteDistribution> {
        &self.groups
    }

    pub fn shares(&self) -> &BTreeMap<Group, f64> {
        &self.shares
    }

    /// Total number of atoms across groups.
    pub fn n_atoms(&self) -> usize {
        self.groups.values().map(DiscreteDistribution::len).sum()
    }
}
