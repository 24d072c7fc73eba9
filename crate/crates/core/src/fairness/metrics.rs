use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::group::Group;

use super::Predictor;

fn require(task: Task, h: &dyn Predictor, data: &Dataset) -> Result<()> {
    if h.task() != task || data.task() != task {
        return Err(Error::TaskMismatch {
            expected: match task {
                Task::Classification => "classification",
                Task::Regression => "regression",
            },
        });
    }
    Ok(())
}

pub fn accuracy(h: &dyn Predictor, data: &Dataset) -> Result<f64> {
    require(Task::Classification, h, data)?;
    let correct = (0..data.n())
        .filter(|&i| h.decision(data.row(i), data.s()[i]) == data.y()[i])
        .count();
    Ok(correct as f64 / data.n() as f64)
}

pub fn mse(h: &dyn Predictor, data: &Dataset) -> Result<f64> {
    require(Task::Regression, h, data)?;
    let total: f64 = (0..data.n())
        .map(|i| {
            let r = h.score(data.row(i), data.s()[i]) - data.y()[i];
            r * r
        })
        .sum();
    Ok(total / data.n() as f64)
}

/// `|P(ĥ=1 | S=0) − P(ĥ=1 | S=1)|`.
pub fn parity_gap(h: &dyn Predictor, data: &Dataset) -> Result<f64> {
    require(Task::Classification, h, data)?;
    let groups = data.group_rows();
    if groups.len() != 2 || !groups.contains_key(&Group(0)) || !groups.contains_key(&Group(1)) {
        return Err(Error::GroupCount {
            expected: "two groups labeled 0 and 1".into(),
            found: groups.len(),
        });
    }
    let rate = |g: Group| {
        let rows = &groups[&g];
        let ones = rows.iter().filter(|&&i| h.decision(data.row(i), g) == 1.0).count();
        ones as f64 / rows.len() as f64
    };
    Ok((rate(Group(0)) - rate(Group(1))).abs())
}

/// `sup_t |P(ĥ>t | S=s0) − P(ĥ>t | S=s1)|` over the two groups, exact over
/// the observed scores.
pub fn ks_distance(h: &dyn Predictor, data: &Dataset) -> Result<f64> {
    let groups = data.group_rows();
    if groups.len() != 2 {
        return Err(Error::GroupCount {
            expected: "2".into(),
            found: groups.len(),
        });
    }
    let mut scores: Vec<Vec<f64>> = groups
        .iter()
        .map(|(&g, rows)| rows.iter().map(|&i| h.score(data.row(i), g)).collect())
        .collect();
    for s in &mut scores {
        s.sort_by(f64::total_cmp);
    }
    Ok(ks_sorted(&scores[0], &scores[1]))
}

/// Two-sample KS statistic of sorted samples.
pub(crate) fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() || j < b.len() {
        // next threshold: smallest unconsumed value, consumed on both sides
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// `sqrt(Var(ĥ) / Var(Y))` with population variances.
pub fn normalized_variance(h: &dyn Predictor, data: &Dataset) -> Result<f64> {
    // centred on the first value so constant inputs give exactly 0
    let var = |v: &[f64]| {
        let Some(&c) = v.first() else { return 0.0 };
        let m = v.iter().map(|x| x - c).sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - c - m) * (x - c - m)).sum::<f64>() / v.len() as f64
    };
    let vy = var(data.y().as_slice().expect("contiguous"));
    if vy == 0.0 {
        return Err(Error::ZeroTargetVariance);
    }
    let scores: Vec<f64> = (0..data.n()).map(|i| h.score(data.row(i), data.s()[i])).collect();
    Ok((var(&scores) / vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{ConstantPredictor, FnPredictor};
    use ndarray::{Array1, Array2};

    fn data(x: &[f64], s: &[i64], y: &[f64], task: Task) -> Dataset {
        Dataset::new(
            Array2::from_shape_vec((x.len(), 1), x.to_vec()).unwrap(),
            s.iter().map(|&g| Group(g)).collect(),
            Array1::from(y.to_vec()),
            vec!["x".into()],
            task,
        )
        .unwrap()
    }

    fn identity(task: Task) -> FnPredictor<impl Fn(ndarray::ArrayView1<'_, f64>, Group) -> f64 + Sync> {
        FnPredictor::new(task, |x: ndarray::ArrayView1<'_, f64>, _| x[0])
    }

    #[test]
    fn accuracy_cases() {
        let d = data(&[1.0, -1.0, 1.0, 1.0], &[0, 0, 1, 1], &[1.0, 0.0, 1.0, 0.0], Task::Classification);
        assert_eq!(accuracy(&identity(Task::Classification), &d).unwrap(), 0.75);
        let right = data(&[1.0, -1.0], &[0, 1], &[1.0, 0.0], Task::Classification);
        assert_eq!(accuracy(&identity(Task::Classification), &right).unwrap(), 1.0);
        let wrong = data(&[1.0, -1.0], &[0, 1], &[0.0, 1.0], Task::Classification);
        assert_eq!(accuracy(&identity(Task::Classification), &wrong).unwrap(), 0.0);
        assert!(matches!(
            accuracy(&identity(Task::Regression), &d),
            Err(Error::TaskMismatch { .. })
        ));
    }

    #[test]
    fn mse_cases() {
        let d = data(&[0.0, 0.0], &[0, 1], &[1.0, -1.0], Task::Regression);
        assert_eq!(mse(&ConstantPredictor { value: 0.0, task: Task::Regression }, &d).unwrap(), 1.0);
        let d = data(&[1.0, 2.0], &[0, 1], &[0.0, 0.0], Task::Regression);
        assert_eq!(mse(&identity(Task::Regression), &d).unwrap(), 2.5);
        let d = data(&[1.0, 2.0], &[0, 1], &[1.0, 2.0], Task::Regression);
        assert_eq!(mse(&identity(Task::Regression), &d).unwrap(), 0.0);
    }

    #[test]
    fn parity_gap_cases() {
        let d = data(&[1.0, -1.0, 1.0, 1.0], &[0, 0, 1, 1], &[0.0; 4], Task::Classification);
        assert_eq!(parity_gap(&identity(Task::Classification), &d).unwrap(), 0.5);
        let by_group = FnPredictor::new(Task::Classification, |_: ndarray::ArrayView1<'_, f64>, s: Group| s.value() - 0.5);
        assert_eq!(parity_gap(&by_group, &d).unwrap(), 1.0);
        let c = ConstantPredictor { value: 1.0, task: Task::Classification };
        assert_eq!(parity_gap(&c, &d).unwrap(), 0.0);
        let three = data(&[0.0; 3], &[0, 1, 2], &[0.0; 3], Task::Classification);
        assert!(matches!(parity_gap(&c, &three), Err(Error::GroupCount { found: 3, .. })));
    }

    #[test]
    fn ks_cases() {
        let h = identity(Task::Regression);
        let same = data(&[0.0, 1.0, 1.0, 0.0], &[0, 0, 1, 1], &[0.0; 4], Task::Regression);
        assert_eq!(ks_distance(&h, &same).unwrap(), 0.0);
        let disjoint = data(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1], &[0.0; 4], Task::Regression);
        assert_eq!(ks_distance(&h, &disjoint).unwrap(), 1.0);
        let inter = data(&[0.0, 2.0, 1.0, 3.0], &[0, 0, 1, 1], &[0.0; 4], Task::Regression);
        assert_eq!(ks_distance(&h, &inter).unwrap(), 0.5);
    }

    #[test]
    fn normalized_variance_cases() {
        let d = data(&[1.0, 3.0], &[0, 1], &[0.0, 8.0], Task::Regression);
        // Var(ĥ) = 1, Var(Y) = 16
        assert_eq!(normalized_variance(&identity(Task::Regression), &d).unwrap(), 0.25);
        let fit = FnPredictor::new(Task::Regression, |x: ndarray::ArrayView1<'_, f64>, _| 4.0 * (x[0] - 1.0));
        assert_eq!(normalized_variance(&fit, &d).unwrap(), 1.0);
        assert_eq!(
            normalized_variance(&ConstantPredictor { value: 2.0, task: Task::Regression }, &d).unwrap(),
            0.0
        );
        let flat = data(&[1.0, 3.0], &[0, 1], &[2.0, 2.0], Task::Regression);
        assert!(matches!(
            normalized_variance(&identity(Task::Regression), &flat),
            Err(Error::ZeroTargetVariance)
        ));
    }
}
