use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_objective, Objective, TrainConfig};
use crate::cfmodel::{build_ot_model, CounterfactualModel, GroupedData};
use crate::data::{split, Dataset, Task};
use crate::error::Result;
use crate::fairness::{accuracy, cfr, ks_distance, mse, normalized_variance, parity_gap, CfTolerance, ConstantPredictor, Predictor};
use crate::rng::derive_seed;

/// `{10⁻⁴, 10⁻³·⁵, …, 10¹}`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    /// Best constant under the data loss.
    Const,
    /// Trained without penalty.
    Unaltered,
    Trained,
}

impl PredictorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictorKind::Const => "const",
            PredictorKind::Unaltered => "unaltered",
            PredictorKind::Trained => "trained",
        }
    }
}

/// Test-split metrics of one predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Accuracy (classification) or MSE (regression).
    pub performance: f64,
    /// Parity gap (classification) or KS distance (regression).
    pub disparity: f64,
    pub cfr: f64,
    pub normalized_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub predictor: PredictorKind,
    pub lambda: f64,
    pub repeat: usize,
    pub metrics: Metrics,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub task: Task,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// One row per (predictor, λ, repeat). Wall time is left out so reruns
    /// produce identical files; see [`SweepTable::timings_csv`].
    pub fn to_csv(&self) -> String {
        let (perf, disp) = match self.task {
            Task::Classification => ("acc", "pg"),
            Task::Regression => ("mse", "ks"),
        };
        let mut out = format!("predictor,lambda,repeat,{perf},{disp},cfr,normalized_variance\n");
        for r in &self.rows {
            let m = &r.metrics;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.predictor.as_str(),
                r.lambda,
                r.repeat,
                m.performance,
                m.disparity,
                m.cfr,
                m.normalized_variance
            )
            .expect("string write");
        }
        out
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("predictor,lambda,repeat,seconds\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{:.6}", r.predictor.as_str(), r.lambda, r.repeat, r.seconds).expect("string write");
        }
        out
    }

    /// Rows of one predictor kind at one λ, in repeat order.
    pub fn select(&self, kind: PredictorKind, lambda: f64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.predictor == kind && r.lambda == lambda).collect()
    }
}

/// Every metric of the fairness module on the evaluation split.
pub fn evaluate(h: &dyn Predictor, data: &Dataset, m: &CounterfactualModel, tol: CfTolerance) -> Result<Metrics> {
    let (performance, disparity) = match data.task() {
        Task::Classification => (accuracy(h, data)?, parity_gap(h, data)?),
        Task::Regression => (mse(h, data)?, ks_distance(h, data)?),
    };
    Ok(Metrics {
        performance,
        disparity,
        cfr: cfr(h, m, data, tol)?,
        normalized_variance: normalized_variance(h, data)?,
    })
}

/// Minimizer of the data loss over constants.
pub fn best_constant(data: &Dataset) -> ConstantPredictor {
    let mean = data.y().mean().unwrap_or(0.0);
    let value = match data.task() {
        Task::Regression => mean,
        Task::Classification => {
            let p = mean.clamp(1e-12, 1.0 - 1e-12);
            (p / (1.0 - p)).ln()
        }
    };
    ConstantPredictor { value, task: data.task() }
}

/// Trains at every λ on a fixed split and evaluates on the test split, with
/// the `Const` and `Unaltered` baselines. Repeats differ only through the
/// initialization seed. Cells run in parallel; row order is fixed.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    train: &Dataset,
    test: &Dataset,
    m_train: &CounterfactualModel,
    m_test: &CounterfactualModel,
    lambdas: &[f64],
    config: &TrainConfig,
    repeats: usize,
    tol: Option<CfTolerance>,
) -> Result<SweepTable> {
    config.validate()?;
    if lambdas.is_empty() || repeats == 0 {
        return Err(crate::Error::Config("sweep needs a nonempty grid and at least one repeat".into()));
    }
    let tol = tol.unwrap_or_else(|| CfTolerance::for_data(test));
    let mut rows = Vec::new();
    for repeat in 0..repeats {
        let cfg = TrainConfig {
            seed: derive_seed(config.seed, repeat as u64),
            ..config.clone()
        };
        rows.extend(cells(train, test, m_train, m_test, lambdas, &cfg, repeat, tol)?);
    }
    Ok(SweepTable { task: test.task(), rows })
}

#[allow(clippy::too_many_arguments)]
fn cells(
    train: &Dataset,
    test: &Dataset,
    m_train: &CounterfactualModel,
    m_test: &CounterfactualModel,
    lambdas: &[f64],
    cfg: &TrainConfig,
    repeat: usize,
    tol: CfTolerance,
) -> Result<Vec<SweepRow>> {
    let mut jobs: Vec<(PredictorKind, f64)> = vec![(PredictorKind::Const, 0.0), (PredictorKind::Unaltered, 0.0)];
    jobs.extend(lambdas.iter().map(|&l| (PredictorKind::Trained, l)));
    jobs.into_par_iter()
        .map(|(kind, lambda)| {
            let start = Instant::now();
            let metrics = match kind {
                PredictorKind::Const => evaluate(&best_constant(train), test, m_test, tol)?,
                _ => {
                    let c = TrainConfig { lambda, ..cfg.clone() };
                    let obj = Objective::new(&c.feature_map, train, m_train, lambda)?;
                    let out = train_objective(&obj, train.d(), &c)?;
                    evaluate(&out.predictor, test, m_test, tol)?
                }
            };
            Ok(SweepRow {
                predictor: kind,
                lambda,
                repeat,
                metrics,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Sweep over fresh splits: repeat `r` splits `data` with a seed derived
/// from `seed` and `r`, then builds one optimal transport model per split.
pub fn sweep_resplit(
    data: &Dataset,
    train_fraction: f64,
    lambdas: &[f64],
    config: &TrainConfig,
    repeats: usize,
    seed: u64,
    tol: Option<CfTolerance>,
) -> Result<SweepTable> {
    config.validate()?;
    if lambdas.is_empty() || repeats == 0 {
        return Err(crate::Error::Config("sweep needs a nonempty grid and at least one repeat".into()));
    }
    let per_repeat: Vec<Vec<SweepRow>> = (0..repeats)
        .into_par_iter()
        .map(|repeat| {
            let (train, test) = split(data, train_fraction, derive_seed(seed, repeat as u64))?;
            let m_train = build_ot_model(&GroupedData::from_dataset(&train)?)?;
            let m_test = build_ot_model(&GroupedData::from_dataset(&test)?)?;
            let tol = tol.unwrap_or_else(|| CfTolerance::for_data(&test));
            let cfg = TrainConfig {
                seed: derive_seed(config.seed, repeat as u64),
                ..config.clone()
            };
            cells(&train, &test, &m_train, &m_test, lambdas, &cfg, repeat, tol)
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        task: data.task(),
        rows: per_repeat.into_iter().flatten().collect(),
    })
}
