use rand::seq::SliceRandom;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

const MAX_ATTEMPTS: u64 = 100;

/// Seeded shuffle, then the first `round(fraction·n)` rows go to train. Both
/// parts must contain every group; otherwise the shuffle is redrawn with a
/// derived seed, up to 100 times. Rows keep their original order inside each
/// part.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n = data.n();
    let n_train = (train_fraction * n as f64).round() as usize;
    let groups = data.groups();
    let mut last_missing = groups.first().map(|g| g.0).unwrap_or(0);
    for attempt in 0..MAX_ATTEMPTS {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut seeded(derive_seed(seed, attempt)));
        let (mut train, mut test) = (idx[..n_train].to_vec(), idx[n_train..].to_vec());
        let missing = groups.iter().find(|g| {
            !train.iter().any(|&i| data.s()[i] == **g) || !test.iter().any(|&i| data.s()[i] == **g)
        });
        match missing {
            Some(g) => last_missing = g.0,
            None => {
                train.sort_unstable();
                test.sort_unstable();
                return Ok((data.subset(&train), data.subset(&test)));
            }
        }
    }
    Err(Error::EmptyGroup(last_missing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use crate::group::Group;
    use ndarray::{Array1, Array2};

    fn toy(n: usize, groups: usize) -> Dataset {
        Dataset::new(
            Array2::from_shape_fn((n, 1), |(i, _)| i as f64),
            (0..n).map(|i| Group((i % groups) as i64)).collect(),
            Array1::zeros(n),
            vec!["x".into()],
            Task::Regression,
        )
        .unwrap()
    }

    #[test]
    fn sizes_and_reproducibility() {
        let d = toy(100, 2);
        let (tr, te) = split(&d, 0.67, 5).unwrap();
        assert_eq!((tr.n(), te.n()), (67, 33));
        let (tr2, te2) = split(&d, 0.67, 5).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(te, te2);
        let mut all: Vec<f64> = tr.x().iter().chain(te.x().iter()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn single_group_is_fine() {
        let (tr, te) = split(&toy(10, 1), 0.5, 0).unwrap();
        assert_eq!((tr.n(), te.n()), (5, 5));
    }

    #[test]
    fn impossible_split() {
        // group 2 has a single row and cannot appear on both sides
        let mut d = toy(9, 2);
        d = Dataset::new(
            d.x().clone(),
            (0..9).map(|i| Group(if i == 4 { 2 } else { (i % 2) as i64 })).collect(),
            d.y().clone(),
            d.columns().to_vec(),
            Task::Regression,
        )
        .unwrap();
        assert!(matches!(split(&d, 0.5, 0), Err(Error::EmptyGroup(2))));
        assert!(split(&d, 1.0, 0).is_err());
    }
}
