use ndarray::Array1;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{FeatureMap, LinearPredictor, Objective};
use crate::cfmodel::CounterfactualModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    Zeros,
    Gaussian { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub ball_radius: Option<f64>,
    pub seed: u64,
    pub init: Init,
    pub feature_map: FeatureMap,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.0,
            learning_rate: 0.1,
            max_iters: 5000,
            grad_tol: 1e-7,
            ball_radius: None,
            seed: 0,
            init: Init::Zeros,
            feature_map: FeatureMap::AugmentedIdentity,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and nonnegative");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if let Some(r) = self.ball_radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad("ball_radius must be positive");
            }
        }
        if let Init::Gaussian { scale } = self.init {
            if !(scale > 0.0 && scale.is_finite()) {
                return bad("gaussian init scale must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub predictor: LinearPredictor,
    pub iterations: usize,
    pub converged: bool,
    pub initial_risk: f64,
    pub final_risk: f64,
}

fn project(theta: &mut Array1<f64>, radius: Option<f64>) {
    if let Some(r) = radius {
        let norm = theta.dot(theta).sqrt();
        if norm > r {
            *theta *= r / norm;
        }
    }
}

/// Full-batch projected gradient descent on the empirical risk. A step that
/// would increase the risk is halved, up to 30 times; if no halving helps the
/// run stops where it is.
pub fn train(data: &Dataset, m: &CounterfactualModel, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let obj = Objective::new(&config.feature_map, data, m, config.lambda)?;
    train_objective(&obj, data.d(), config)
}

/// [`train`] on a prebuilt objective.
pub fn train_objective(obj: &Objective, input_dim: usize, config: &TrainConfig) -> Result<TrainOutcome> {
    let p = obj.dim();
    let mut theta = match config.init {
        Init::Zeros => Array1::zeros(p),
        Init::Gaussian { scale } => {
            let mut rng = seeded(config.seed);
            (0..p).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); scale * z }).collect::<Array1<f64>>()
        }
    };
    project(&mut theta, config.ball_radius);
    let initial_risk = obj.risk(&theta)?;
    if !initial_risk.is_finite() {
        return Err(Error::NonFiniteLoss(0));
    }
    let mut risk = initial_risk;
    let mut grad = obj.gradient(&theta)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters {
        if grad.dot(&grad).sqrt() <= config.grad_tol {
            converged = true;
            break;
        }
        let mut step = config.learning_rate;
        let mut accepted = None;
        let mut saw_finite = false;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = &theta - &(&grad * step);
            project(&mut cand, config.ball_radius);
            let r = obj.risk(&cand)?;
            saw_finite |= r.is_finite();
            if r <= risk {
                accepted = Some((cand, r));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, r)) => {
                let moved = cand != theta;
                theta = cand;
                risk = r;
                grad = obj.gradient(&theta)?;
                if !moved {
                    break;
                }
            }
            None if !saw_finite => return Err(Error::NonFiniteLoss(iterations)),
            None => break,
        }
    }
    let predictor = LinearPredictor::new(theta, config.feature_map.clone(), input_dim, obj.task())?;
    Ok(TrainOutcome {
        predictor,
        iterations,
        converged,
        initial_risk,
        final_risk: risk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfmodel::{build_ot_model, GroupedData};
    use crate::data::Task;
    use crate::fairness::{accuracy, Predictor};
    use crate::group::Group;
    use ndarray::array;

    fn separable() -> Dataset {
        let x = array![[-2.0, 1.0], [-1.0, -1.0], [-1.5, 0.3], [1.0, 0.5], [2.0, -1.0], [1.2, 2.0]];
        Dataset::new(
            x,
            vec![Group(0), Group(1), Group(0), Group(1), Group(0), Group(1)],
            array![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            vec!["a".into(), "b".into()],
            Task::Classification,
        )
        .unwrap()
    }

    #[test]
    fn separable_toy_is_fitted() {
        let d = separable();
        let m = build_ot_model(&GroupedData::from_dataset(&d).unwrap()).unwrap();
        let out = train(&d, &m, &TrainConfig { max_iters: 500, ..Default::default() }).unwrap();
        assert_eq!(accuracy(&out.predictor, &d).unwrap(), 1.0);
        assert!(out.final_risk <= out.initial_risk);
    }

    #[test]
    fn zero_iterations_returns_init() {
        let d = separable();
        let m = build_ot_model(&GroupedData::from_dataset(&d).unwrap()).unwrap();
        let cfg = TrainConfig {
            max_iters: 0,
            init: Init::Gaussian { scale: 1.0 },
            seed: 4,
            ..Default::default()
        };
        let out = train(&d, &m, &cfg).unwrap();
        let mut rng = seeded(4);
        let expected: Array1<f64> = (0..4).map(|_| -> f64 { StandardNormal.sample(&mut rng) }).collect();
        assert_eq!(out.predictor.theta(), &expected);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn huge_lambda_collapses_pair_gaps() {
        let d = separable();
        let m = build_ot_model(&GroupedData::from_dataset(&d).unwrap()).unwrap();
        let out = train(&d, &m, &TrainConfig { lambda: 1e3, ..Default::default() }).unwrap();
        let h = &out.predictor;
        let mut worst: f64 = 0.0;
        for (&(s, t), c) in m.couplings() {
            for e in c.entries() {
                let a = h.score(m.data().group(s).unwrap().point(e.i), s);
                let b = h.score(m.target_points(s, t).unwrap().row(e.j), t);
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst <= 1e-3, "max coupled gap {worst}");
    }

    #[test]
    fn ball_is_respected() {
        let d = separable();
        let m = build_ot_model(&GroupedData::from_dataset(&d).unwrap()).unwrap();
        let cfg = TrainConfig {
            ball_radius: Some(0.5),
            max_iters: 200,
            ..Default::default()
        };
        let out = train(&d, &m, &cfg).unwrap();
        assert!(out.predictor.theta().dot(out.predictor.theta()).sqrt() <= 0.5 + 1e-12);
    }

    #[test]
    fn bad_config() {
        let d = separable();
        let m = build_ot_model(&GroupedData::from_dataset(&d).unwrap()).unwrap();
        let cfg = TrainConfig { learning_rate: 0.0, ..Default::default() };
        assert!(matches!(train(&d, &m, &cfg), Err(Error::Config(_))));
    }
}
