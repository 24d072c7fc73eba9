use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::cfmodel::CounterfactualModel;
use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::group::Group;

/// Slack on the `CFT ≥ 1 − δ` comparison, absorbing rounding in the
/// normalized row weights.
pub const CFT_TOL: f64 = 1e-12;
/// Score tolerance of [`check_deterministic_cf`] for regression.
const SCORE_TOL: f64 = 1e-12;

/// `(ε, δ)` of approximate counterfactual fairness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfTolerance {
    pub epsilon: f64,
    pub delta: f64,
}

impl CfTolerance {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !(0.0..=1.0).contains(&delta) {
            return Err(Error::Config(format!("need epsilon >= 0 and delta in [0, 1], got ({epsilon}, {delta})")));
        }
        Ok(CfTolerance { epsilon, delta })
    }

    /// `δ = 0.1` and [`default_epsilon`].
    pub fn for_data(data: &Dataset) -> Self {
        CfTolerance {
            epsilon: default_epsilon(data),
            delta: 0.1,
        }
    }
}

/// 0 for classification; `½ E|Y − Y'|` over all unordered pairs of rows for
/// regression.
pub fn default_epsilon(data: &Dataset) -> f64 {
    if data.task() == Task::Classification || data.n() < 2 {
        return 0.0;
    }
    let mut y = data.y().to_vec();
    y.sort_by(f64::total_cmp);
    let n = y.len();
    // Σ_{i<j} (y_(j) − y_(i)) = Σ_k y_(k) (2k − n + 1)
    let total: f64 = y.iter().enumerate().map(|(k, v)| v * (2.0 * k as f64 - n as f64 + 1.0)).sum();
    let pairs = (n * (n - 1) / 2) as f64;
    0.5 * total / pairs
}

/// Mass of the counterparts of atom `i` of group `s` in group `s'` whose
/// prediction is within `epsilon` of the atom's own.
pub fn cft(h: &dyn Predictor, m: &CounterfactualModel, s: Group, i: usize, s_prime: Group, epsilon: f64) -> Result<f64> {
    let weights = m.counterpart_distribution(s, i, s_prime)?;
    let x = m.data().group(s)?.point(i);
    let own = h.prediction(x, s);
    let targets = m.target_points(s, s_prime)?;
    Ok(weights
        .iter()
        .filter(|(j, _)| (own - h.prediction(targets.row(*j), s_prime)).abs() <= epsilon)
        .map(|(_, w)| w)
        .sum())
}

/// Share-weighted fraction of atoms whose CFT reaches `1 − δ` towards every
/// other group.
pub fn cfr(h: &dyn Predictor, m: &CounterfactualModel, data: &Dataset, tol: CfTolerance) -> Result<f64> {
    if h.task() != data.task() {
        return Err(Error::TaskMismatch {
            expected: match data.task() {
                Task::Classification => "classification",
                Task::Regression => "regression",
            },
        });
    }
    let labels = m.groups();
    let threshold = 1.0 - tol.delta - CFT_TOL;
    let mut num = 0.0;
    let mut den = 0.0;
    for &s in &labels {
        let mu = m.data().group(s)?;
        let passes: Vec<bool> = (0..mu.len())
            .into_par_iter()
            .map(|i| {
                if !(mu.weights()[i] > 0.0) {
                    return Ok(true);
                }
                for &t in labels.iter().filter(|&&t| t != s) {
                    if cft(h, m, s, i, t, tol.epsilon)? < threshold {
                        return Ok(false);
                    }
                }
                Ok(true)
            })
            .collect::<Result<_>>()?;
        let total: f64 = mu.weights().iter().sum();
        let passed: f64 = mu.weights().iter().zip(&passes).filter(|(_, &p)| p).map(|(w, _)| w).sum();
        let share = m.data().share(s)?;
        num += share * (passed / total);
        den += share;
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicReport {
    pub fair: bool,
    pub atoms_checked: usize,
    pub violations: usize,
    pub max_gap: f64,
}

/// Whether `h(x, s) = h(T(x), s')` for the single counterpart `T(x)` of
/// every atom and ordered pair. Decisions must agree exactly; regression
/// scores within 1e-12.
pub fn check_deterministic_cf(h: &dyn Predictor, m: &CounterfactualModel) -> Result<DeterministicReport> {
    let mut report = DeterministicReport {
        fair: true,
        atoms_checked: 0,
        violations: 0,
        max_gap: 0.0,
    };
    let tol = match h.task() {
        Task::Classification => 0.0,
        Task::Regression => SCORE_TOL,
    };
    for (&(s, t), c) in m.couplings() {
        if s == t {
            continue;
        }
        let mu = m.data().group(s)?;
        let targets = m.target_points(s, t)?;
        for i in 0..c.n_src() {
            let row = c.row(i);
            if row.len() > 1 {
                return Err(Error::NonDeterministicModel {
                    s: s.0,
                    s_prime: t.0,
                    index: i,
                });
            }
            let Some(e) = row.first() else { continue };
            let gap = (h.prediction(mu.point(i), s) - h.prediction(targets.row(e.j), t)).abs();
            report.atoms_checked += 1;
            report.max_gap = report.max_gap.max(gap);
            if gap > tol {
                report.violations += 1;
            }
        }
    }
    report.fair = report.violations == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfmodel::{build_ot_model, CounterfactualModel, GroupedData, ModelKind};
    use crate::fairness::{ConstantPredictor, FnPredictor};
    use crate::transport::{Coupling, DiscreteDistribution};
    use ndarray::{array, Array1, Array2, ArrayView1};
    use std::collections::BTreeMap;

    fn dataset(x: Array2<f64>, s: &[i64], y: &[f64], task: Task) -> Dataset {
        let d = x.ncols();
        Dataset::new(
            x,
            s.iter().map(|&g| Group(g)).collect(),
            Array1::from(y.to_vec()),
            (0..d).map(|k| format!("x{k}")).collect(),
            task,
        )
        .unwrap()
    }

    fn by_group() -> FnPredictor<impl Fn(ArrayView1<'_, f64>, Group) -> f64 + Sync> {
        FnPredictor::new(Task::Classification, |_: ArrayView1<'_, f64>, s: Group| s.value() - 0.5)
    }

    #[test]
    fn constant_predictor_is_fair() {
        let d = dataset(array![[0.0], [1.0], [5.0], [2.0], [3.0]], &[0, 0, 1, 1, 1], &[0.0, 1.0, 1.0, 0.0, 0.0], Task::Classification);
        let m = build_ot_model(&GroupedData::from_dataset(&d).unwrap()).unwrap();
        let c = ConstantPredictor { value: 1.0, task: Task::Classification };
        let tol = CfTolerance::new(0.0, 0.0).unwrap();
        assert_eq!(cfr(&c, &m, &d, tol).unwrap(), 1.0);
        assert_eq!(cft(&c, &m, Group(0), 1, Group(1), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn label_flip_scores_zero() {
        let d = dataset(array![[0.0], [1.0], [0.0], [1.0]], &[0, 0, 1, 1], &[0.0, 1.0, 0.0, 1.0], Task::Classification);
        let m = build_ot_model(&GroupedData::from_dataset(&d).unwrap()).unwrap();
        let tol = CfTolerance::new(0.0, 0.1).unwrap();
        assert_eq!(cfr(&by_group(), &m, &d, tol).unwrap(), 0.0);
        // δ = 1 accepts everything
        assert_eq!(cfr(&by_group(), &m, &d, CfTolerance::new(0.0, 1.0).unwrap()).unwrap(), 1.0);
        let r = check_deterministic_cf(&by_group(), &m).unwrap();
        assert!(!r.fair);
        assert_eq!(r.violations, 4);
    }

    fn two_atom_model() -> CounterfactualModel {
        let groups = BTreeMap::from([
            (Group(0), DiscreteDistribution::uniform_1d(&[0.0]).unwrap()),
            (Group(1), DiscreteDistribution::uniform_1d(&[0.1, 0.5]).unwrap()),
        ]);
        let shares = BTreeMap::from([(Group(0), 1.0 / 3.0), (Group(1), 2.0 / 3.0)]);
        let data = GroupedData::new(groups, shares).unwrap();
        let c01 = Coupling::from_triplets(1, 2, &[(0, 0, 0.5), (0, 1, 0.5)]).unwrap();
        let couplings = BTreeMap::from([
            ((Group(0), Group(1)), c01.clone()),
            ((Group(1), Group(0)), c01.transpose()),
            ((Group(0), Group(0)), Coupling::identity(&[1.0])),
            ((Group(1), Group(1)), Coupling::identity(&[0.5, 0.5])),
        ]);
        CounterfactualModel::new(ModelKind::Custom, data, couplings, BTreeMap::new()).unwrap()
    }

    #[test]
    fn cft_weights() {
        let m = two_atom_model();
        let id = FnPredictor::new(Task::Regression, |x: ArrayView1<'_, f64>, _| x[0]);
        assert_eq!(cft(&id, &m, Group(0), 0, Group(1), 0.2).unwrap(), 0.5);
        assert_eq!(cft(&id, &m, Group(0), 0, Group(1), 0.6).unwrap(), 1.0);
        assert_eq!(cft(&id, &m, Group(1), 1, Group(0), 0.2).unwrap(), 0.0);
        assert!(matches!(
            check_deterministic_cf(&id, &m),
            Err(Error::NonDeterministicModel { s: 0, s_prime: 1, index: 0 })
        ));
    }

    #[test]
    fn cfr_monotone_in_tolerances() {
        let m = two_atom_model();
        let d = dataset(array![[0.0], [0.1], [0.5]], &[0, 1, 1], &[0.0, 1.0, 2.0], Task::Regression);
        let id = FnPredictor::new(Task::Regression, |x: ArrayView1<'_, f64>, _| x[0]);
        let mut last = 0.0;
        for eps in [0.0, 0.05, 0.1, 0.3, 0.5, 1.0] {
            let v = cfr(&id, &m, &d, CfTolerance::new(eps, 0.0).unwrap()).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert_eq!(last, 1.0);
        let mut last = 0.0;
        for delta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let v = cfr(&id, &m, &d, CfTolerance::new(0.2, delta).unwrap()).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn default_epsilon_matches_pairs() {
        let d = dataset(array![[0.0], [0.0], [0.0]], &[0, 1, 1], &[1.0, 4.0, 2.0], Task::Regression);
        // pairs: |1−4| + |1−2| + |4−2| = 6 over 3 pairs
        assert_eq!(default_epsilon(&d), 1.0);
        let c = dataset(array![[0.0], [0.0]], &[0, 1], &[1.0, 0.0], Task::Classification);
        assert_eq!(default_epsilon(&c), 0.0);
        assert_eq!(CfTolerance::for_data(&d).delta, 0.1);
        assert!(CfTolerance::new(-1.0, 0.5).is_err());
        assert!(CfTolerance::new(0.0, 1.5).is_err());
    }
}
