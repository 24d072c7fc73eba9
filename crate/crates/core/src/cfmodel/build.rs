use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;

use super::{CounterfactualModel, GroupedData, ModelKind};
use crate::data::Task;
use crate::error::{Error, Result};
use crate::fairness::Predictor;
use crate::group::Group;
use crate::scm::LinearAdditiveScm;
use crate::transport::{solve_quadratic, Coupling, Entry};

/// Tolerance on class shares for the fair-washing construction.
pub const PARITY_TOL: f64 = 1e-9;

fn require_two(data: &GroupedData) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::GroupCount {
            expected: "at least 2".into(),
            found: data.len(),
        });
    }
    Ok(())
}

/// Ascending pairs `s < s'`.
fn half_pairs(labels: &[Group]) -> Vec<(Group, Group)> {
    let mut out = Vec::new();
    for (k, &s) in labels.iter().enumerate() {
        for &t in &labels[k + 1..] {
            out.push((s, t));
        }
    }
    out
}

/// Fills `(s', s)` by transposition and the diagonals by identity pairings.
fn complete(data: &GroupedData, half: Vec<((Group, Group), Coupling)>) -> BTreeMap<(Group, Group), Coupling> {
    let mut couplings = BTreeMap::new();
    for ((s, t), c) in half {
        couplings.insert((t, s), c.transpose());
        couplings.insert((s, t), c);
    }
    for (&s, mu) in data.groups() {
        couplings.insert((s, s), Coupling::identity(mu.weights().as_slice().expect("contiguous")));
    }
    couplings
}

/// Quadratic-cost optimal transport between every pair of groups. Only the
/// pairs `s < s'` are solved; pair solves run in parallel.
pub fn build_ot_model(data: &GroupedData) -> Result<CounterfactualModel> {
    require_two(data)?;
    let half: Vec<((Group, Group), Coupling)> = half_pairs(&data.labels())
        .into_par_iter()
        .map(|(s, t)| Ok(((s, t), solve_quadratic(data.group(s)?, data.group(t)?)?)))
        .collect::<Result<_>>()?;
    CounterfactualModel::new(ModelKind::OtQuadratic, data.clone(), complete(data, half), BTreeMap::new())
}

/// Deterministic couplings `(I × T*⟨s'|s⟩)♯ μ_s` of a linear additive model.
/// Each source atom is paired with its own image, which becomes the target
/// atom of the pair.
pub fn build_scm_model(scm: &LinearAdditiveScm, data: &GroupedData) -> Result<CounterfactualModel> {
    if scm.dim() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} features, data has {}",
            scm.dim(),
            data.dim()
        )));
    }
    let labels = data.labels();
    let mut couplings = BTreeMap::new();
    let mut targets = BTreeMap::new();
    for &s in &labels {
        let mu = data.group(s)?;
        let w = mu.weights().to_vec();
        for &t in &labels {
            if s == t {
                couplings.insert((s, s), Coupling::identity(&w));
                continue;
            }
            let op = scm.structural_operator(s, t);
            let mapped: Array2<f64> = op.apply_rows(mu.points())?;
            let entries = w
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0.0)
                .map(|(i, &mass)| Entry { i, j: i, mass })
                .collect();
            couplings.insert((s, t), Coupling::new(w.len(), w.len(), entries, w.clone(), w.clone())?);
            targets.insert((s, t), mapped);
        }
    }
    CounterfactualModel::new(ModelKind::ScmLinearAdditive, data.clone(), couplings, targets)
}

fn decided_labels(h: &dyn Predictor, data: &GroupedData, s: Group) -> Result<Vec<i64>> {
    let mu = data.group(s)?;
    Ok((0..mu.len()).map(|i| h.decision(mu.point(i), s) as i64).collect())
}

fn class_shares(labels: &[i64], weights: &[f64]) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for (&y, &w) in labels.iter().zip(weights) {
        *out.entry(y).or_insert(0.0) += w;
    }
    out
}

/// `dπ = Σ_y 1{x∈H(s,y)} 1{x'∈H(s',y)} / p_y dμ_s dμ_{s'}`: couples the
/// atoms that `h` assigns to the same class, independently within each
/// class. Requires `h` to satisfy statistical parity between the groups.
pub fn fairwash_coupling(data: &GroupedData, h: &dyn Predictor, s: Group, s_prime: Group) -> Result<Coupling> {
    if h.task() != Task::Classification {
        return Err(Error::TaskMismatch {
            expected: "classification",
        });
    }
    let (mu, nu) = (data.group(s)?, data.group(s_prime)?);
    let (a, b) = (mu.weights().to_vec(), nu.weights().to_vec());
    let (ls, lt) = (decided_labels(h, data, s)?, decided_labels(h, data, s_prime)?);
    let (ps, pt) = (class_shares(&ls, &a), class_shares(&lt, &b));
    for &y in ps.keys().chain(pt.keys()) {
        let (left, right) = (ps.get(&y).copied().unwrap_or(0.0), pt.get(&y).copied().unwrap_or(0.0));
        if (left - right).abs() > PARITY_TOL {
            return Err(Error::ParityViolated {
                label: y,
                s: s.0,
                s_prime: s_prime.0,
                left,
                right,
            });
        }
    }
    let mut entries = Vec::new();
    for (i, &yi) in ls.iter().enumerate() {
        for (j, &yj) in lt.iter().enumerate() {
            let mass = a[i] * b[j] / ps[&yi];
            if yi == yj && mass > 0.0 {
                entries.push(Entry { i, j, mass });
            }
        }
    }
    Coupling::new(a.len(), b.len(), entries, a, b)
}

/// Fair-washing couplings for every pair, completed by transposition.
pub fn fairwash_model(data: &GroupedData, h: &dyn Predictor) -> Result<CounterfactualModel> {
    require_two(data)?;
    let half = half_pairs(&data.labels())
        .into_iter()
        .map(|(s, t)| Ok(((s, t), fairwash_coupling(data, h, s, t)?)))
        .collect::<Result<Vec<_>>>()?;
    CounterfactualModel::new(ModelKind::Fairwash, data.clone(), complete(data, half), BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{ConstantPredictor, FnPredictor};
    use crate::scm::NoiseSpec;
    use crate::transport::DiscreteDistribution;
    use ndarray::{array, Array1, ArrayView1};

    fn grouped(points: Vec<(i64, Array2<f64>)>) -> GroupedData {
        let n: usize = points.iter().map(|(_, p)| p.nrows()).sum();
        let shares = points.iter().map(|(g, p)| (Group(*g), p.nrows() as f64 / n as f64)).collect();
        let groups = points
            .into_iter()
            .map(|(g, p)| (Group(g), DiscreteDistribution::uniform(p).unwrap()))
            .collect();
        GroupedData::new(groups, shares).unwrap()
    }

    #[test]
    fn identical_groups_couple_by_identity() {
        let pts = array![[0.0, 1.0], [2.0, -1.0], [5.0, 5.0]];
        let data = grouped(vec![(0, pts.clone()), (1, pts.clone())]);
        let m = build_ot_model(&data).unwrap();
        let c = m.coupling(Group(0), Group(1)).unwrap();
        assert_eq!(c, &Coupling::identity(&[1.0 / 3.0; 3]));
        assert!(m.validate().passed);
    }

    #[test]
    fn three_groups_nine_couplings() {
        let data = grouped(vec![
            (0, array![[0.0], [1.0]]),
            (1, array![[10.0], [11.0]]),
            (2, array![[3.0], [-2.0], [7.0]]),
        ]);
        let m = build_ot_model(&data).unwrap();
        assert_eq!(m.couplings().len(), 9);
        let r = m.validate();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.transpose_checked, 3);
        // monotone matching between {0, 1} and {10, 11}
        let c = m.coupling(Group(0), Group(1)).unwrap();
        assert_eq!(c.to_dense(), array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn one_group_is_not_enough() {
        let data = grouped(vec![(0, array![[0.0]])]);
        assert!(matches!(build_ot_model(&data), Err(Error::GroupCount { .. })));
    }

    #[test]
    fn validation_failures_reported() {
        let data = grouped(vec![(0, array![[0.0], [1.0]]), (1, array![[10.0], [11.0]])]);
        let good = build_ot_model(&data).unwrap();

        let mut scaled = good.clone();
        let c = good.coupling(Group(0), Group(1)).unwrap();
        let entries = c
            .entries()
            .iter()
            .map(|e| Entry {
                mass: if e.i == 0 { e.mass * 1.01 } else { e.mass },
                ..*e
            })
            .collect();
        scaled.insert_coupling(
            Group(0),
            Group(1),
            Coupling::new(2, 2, entries, c.src_weights().to_vec(), c.tgt_weights().to_vec()).unwrap(),
        );
        let r = scaled.validate();
        assert!(!r.passed);
        assert_eq!(r.marginal_failures, vec![(Group(0), Group(1))]);
        assert_eq!(r.transpose_failures, vec![(Group(0), Group(1))]);

        let mut missing = good.clone();
        missing.remove_coupling(Group(1), Group(1));
        let r = missing.validate();
        assert!(!r.passed);
        assert_eq!(r.missing_pairs, vec![(Group(1), Group(1))]);
    }

    #[test]
    fn counterpart_rows_are_normalized() {
        let data = grouped(vec![(0, array![[0.0]]), (1, array![[1.0], [3.0]])]);
        let m = build_ot_model(&data).unwrap();
        assert_eq!(
            m.counterpart_distribution(Group(0), 0, Group(1)).unwrap(),
            vec![(0, 0.5), (1, 0.5)]
        );
        assert_eq!(m.counterpart_distribution(Group(1), 1, Group(0)).unwrap(), vec![(0, 1.0)]);
        assert!(matches!(
            m.counterpart_distribution(Group(0), 1, Group(1)),
            Err(Error::UnknownAtom { group: 0, index: 1 })
        ));
        assert!(matches!(
            m.counterpart_distribution(Group(4), 0, Group(1)),
            Err(Error::UnknownGroup(4))
        ));
    }

    fn shift_scm(w: [f64; 2]) -> LinearAdditiveScm {
        LinearAdditiveScm::new(
            Array2::zeros((2, 2)),
            Array1::from(w.to_vec()),
            Array1::zeros(2),
            vec![NoiseSpec::Gaussian { mean: 0.0, sd: 1.0 }; 2],
            NoiseSpec::Bernoulli { p: 0.5 },
        )
        .unwrap()
    }

    #[test]
    fn scm_model_maps_atoms() {
        let data = grouped(vec![(0, array![[0.0, 0.0], [2.0, 1.0]]), (1, array![[5.0, 5.0]])]);
        let m = build_scm_model(&shift_scm([1.0, 1.0]), &data).unwrap();
        assert_eq!(m.target_points(Group(0), Group(1)).unwrap(), &array![[1.0, 1.0], [3.0, 2.0]]);
        assert_eq!(m.target_points(Group(1), Group(0)).unwrap(), &array![[4.0, 4.0]]);
        assert_eq!(
            m.coupling(Group(0), Group(0)).unwrap(),
            &Coupling::identity(&[0.5, 0.5])
        );
        assert!(m.is_deterministic());
        let r = m.validate();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.transpose_checked, 0);

        // mapping there and back is the identity
        let there = build_scm_model(&shift_scm([1.0, 1.0]), &data).unwrap();
        let img = there.target_points(Group(0), Group(1)).unwrap().clone();
        let back = shift_scm([1.0, 1.0]).structural_operator(Group(1), Group(0)).apply_rows(&img).unwrap();
        assert_eq!(back, data.group(Group(0)).unwrap().points());

        let wrong_dim = grouped(vec![(0, array![[0.0]]), (1, array![[1.0]])]);
        assert!(matches!(
            build_scm_model(&shift_scm([1.0, 1.0]), &wrong_dim),
            Err(Error::DimensionMismatch(_))
        ));
    }

    fn threshold() -> FnPredictor<impl Fn(ArrayView1<'_, f64>, Group) -> f64 + Sync> {
        FnPredictor::new(Task::Classification, |x: ArrayView1<'_, f64>, _| x[0] - 0.5)
    }

    #[test]
    fn fairwash_two_by_two() {
        let data = grouped(vec![(0, array![[0.0], [1.0]]), (1, array![[2.0], [0.3]])]);
        let c = fairwash_coupling(&data, &threshold(), Group(0), Group(1)).unwrap();
        // labels: group 0 -> (0, 1), group 1 -> (1, 0)
        assert_eq!(c.to_dense(), array![[0.0, 0.5], [0.5, 0.0]]);
        assert!(c.is_feasible());
    }

    #[test]
    fn fairwash_constant_is_product() {
        let data = grouped(vec![(0, array![[0.0], [1.0]]), (1, array![[2.0], [0.3], [4.0]])]);
        let h = ConstantPredictor { value: 1.0, task: Task::Classification };
        let c = fairwash_coupling(&data, &h, Group(0), Group(1)).unwrap();
        let p = Coupling::product(&[0.5, 0.5], &[1.0 / 3.0; 3]);
        for (x, y) in c.to_dense().iter().zip(p.to_dense().iter()) {
            assert!((x - y).abs() < 1e-15);
        }
        let m = fairwash_model(&data, &h).unwrap();
        assert!(m.validate().passed);
    }

    #[test]
    fn fairwash_needs_parity() {
        let data = grouped(vec![
            (0, array![[0.0], [1.0]]),
            (1, array![[2.0], [0.3], [4.0], [5.0]]),
        ]);
        let err = fairwash_coupling(&data, &threshold(), Group(0), Group(1)).unwrap_err();
        assert!(matches!(err, Error::ParityViolated { .. }));
    }
}
