use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{self, AuditConfig, CoupleConfig, SweepConfig, ToleranceConfig, TrainCmdConfig, VerifyConfig};
use super::manifest::RunManifest;
use super::verify::{summarize, verify_theorem, TheoremRow};
use crate::cfmodel::{build_ot_model, load_model, save_model, CounterfactualModel, GroupedData, ValidationReport};
use crate::data::{load_csv, load_csv_with, split, synth_linear, synth_linear_classification, Dataset, SchemaConfig, Task};
use crate::error::{Error, Result};
use crate::fairlearn::{default_lambda_grid, evaluate, sweep, sweep_resplit, train, LinearPredictor, Metrics};
use crate::fairness::{check_deterministic_cf, CfTolerance, DeterministicReport};
use crate::group::Group;
use crate::scm::LinearAdditiveScm;
use crate::transport::sq_euclidean_points;

pub const TRAIN_MODEL: &str = "train_model";
pub const TEST_MODEL: &str = "test_model";

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn write(out: &Path, name: &str, text: &str, manifest: &mut RunManifest) -> Result<()> {
    let path = out.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    manifest.record(name);
    Ok(())
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T, manifest: &mut RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    write(out, name, &(text + "\n"), manifest)
}

fn existing_dir(path: &Path, what: &str) -> Result<PathBuf> {
    if path.is_dir() {
        Ok(path.to_path_buf())
    } else {
        Err(Error::Config(format!("{what} directory {} does not exist", path.display())))
    }
}

pub fn synth(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let loaded: config::Loaded<config::SynthConfig> = config::load(config)?;
    let mut cfg = loaded.config.clone();
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if cfg.n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    let scm = LinearAdditiveScm::from_config(&cfg.scm)?;
    let data = match cfg.task {
        Task::Regression => synth_linear(&scm, &cfg.outcome, cfg.n, cfg.seed)?,
        Task::Classification => synth_linear_classification(&scm, &cfg.outcome, cfg.n, cfg.seed)?,
    };
    let (train, test) = split(&data, cfg.train_fraction, cfg.seed)?;
    create_dir(out)?;
    let mut manifest = RunManifest::new("synth", Some(cfg.seed), &loaded.raw)?;
    for (name, part) in [("train.csv", &train), ("test.csv", &test)] {
        part.save_csv(&out.join(name))?;
        manifest.record(name);
    }
    write(out, "schema.toml", &data.schema().to_toml(), &mut manifest)?;
    println!("synth: {} train rows, {} test rows, d = {}", train.n(), test.n(), data.d());
    manifest.finish(out)
}

#[derive(Debug, Serialize)]
struct PairCost {
    s: Group,
    s_prime: Group,
    cost: f64,
    nnz: usize,
}

#[derive(Debug, Serialize)]
struct SplitReport {
    n: usize,
    groups: Vec<Group>,
    validation: ValidationReport,
    pairs: Vec<PairCost>,
}

fn split_report(data: &Dataset, m: &CounterfactualModel) -> Result<SplitReport> {
    let mut pairs = Vec::new();
    for (&(s, t), c) in m.couplings() {
        if s == t {
            continue;
        }
        let cost = sq_euclidean_points(m.data().group(s)?.points(), m.target_points(s, t)?)?;
        pairs.push(PairCost {
            s,
            s_prime: t,
            cost: c.cost(&cost)?,
            nnz: c.nnz(),
        });
    }
    Ok(SplitReport {
        n: data.n(),
        groups: m.groups(),
        validation: m.validate(),
        pairs,
    })
}

pub fn couple(config: &Path, out: &Path) -> Result<()> {
    let loaded: config::Loaded<CoupleConfig> = config::load(config)?;
    let schema = SchemaConfig::load(&loaded.resolve(&loaded.config.schema))?;
    let train = load_csv(&loaded.resolve(&loaded.config.train), &schema)?;
    let test = load_csv_with(&loaded.resolve(&loaded.config.test), &schema, &train.encoder)?;
    let mut manifest = RunManifest::new("couple", None, &loaded.raw)?;
    let mut reports = serde_json::Map::new();
    let mut failed = Vec::new();
    create_dir(out)?;
    for (name, dir, data) in [("train", TRAIN_MODEL, &train.dataset), ("test", TEST_MODEL, &test.dataset)] {
        let m = build_ot_model(&GroupedData::from_dataset(data)?)?;
        let report = split_report(data, &m)?;
        if !report.validation.passed {
            failed.push(name);
        }
        save_model(&m, &out.join(dir))?;
        manifest.record(dir);
        println!(
            "couple: {name} model with {} groups, max marginal residual {:.3e}, {}",
            report.groups.len(),
            report.validation.max_marginal_residual,
            if report.validation.passed { "valid" } else { "INVALID" }
        );
        reports.insert(
            name.to_string(),
            serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?,
        );
    }
    write_json(out, "report.json", &reports, &mut manifest)?;
    manifest.finish(out)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!("model validation failed for {}", failed.join(", "))))
    }
}

/// `dir` is either a model directory or a `couple` output holding `sub`.
fn model_dir(dir: &Path, sub: &str) -> Result<PathBuf> {
    let dir = existing_dir(dir, "model")?;
    let nested = dir.join(sub);
    Ok(if nested.is_dir() { nested } else { dir })
}

pub fn train_cmd(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let loaded: config::Loaded<TrainCmdConfig> = config::load(config)?;
    let mut learner = loaded.config.learner.clone();
    if let Some(seed) = seed {
        learner.seed = seed;
    }
    let schema = SchemaConfig::load(&loaded.resolve(&loaded.config.schema))?;
    let data = load_csv(&loaded.resolve(&loaded.config.train), &schema)?.dataset;
    let m = load_model(&model_dir(&loaded.resolve(&loaded.config.models), TRAIN_MODEL)?)?;
    let outcome = train(&data, &m, &learner)?;
    create_dir(out)?;
    let mut manifest = RunManifest::new("train", Some(learner.seed), &loaded.raw)?;
    outcome.predictor.save(&out.join("predictor.json"), Some(&learner))?;
    manifest.record("predictor.json");
    let summary = serde_json::json!({
        "iterations": outcome.iterations,
        "converged": outcome.converged,
        "initial_risk": outcome.initial_risk,
        "final_risk": outcome.final_risk,
    });
    write_json(out, "train.json", &summary, &mut manifest)?;
    println!(
        "train: lambda = {}, risk {:.6} -> {:.6} after {} iterations{}",
        learner.lambda,
        outcome.initial_risk,
        outcome.final_risk,
        outcome.iterations,
        if outcome.converged { "" } else { " (not converged)" }
    );
    manifest.finish(out)
}

fn tolerance(data: &Dataset, cfg: Option<ToleranceConfig>) -> Result<CfTolerance> {
    let base = CfTolerance::for_data(data);
    match cfg {
        None => Ok(base),
        Some(t) => CfTolerance::new(t.epsilon.unwrap_or(base.epsilon), t.delta.unwrap_or(base.delta)),
    }
}

pub fn sweep_cmd(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let loaded: config::Loaded<SweepConfig> = config::load(config)?;
    let mut cfg = loaded.config.clone();
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let mut learner = cfg.learner.clone();
    learner.seed = cfg.seed;
    let lambdas = cfg.lambdas.clone().unwrap_or_else(default_lambda_grid);
    let schema = SchemaConfig::load(&loaded.resolve(&cfg.schema))?;
    let table = match (&cfg.data, &cfg.train, &cfg.test, &cfg.models) {
        (Some(data), None, None, None) => {
            let data = load_csv(&loaded.resolve(data), &schema)?.dataset;
            let tol = match cfg.tolerance {
                None => None,
                Some(_) => Some(tolerance(&data, cfg.tolerance)?),
            };
            sweep_resplit(&data, cfg.train_fraction, &lambdas, &learner, cfg.repeats, cfg.seed, tol)?
        }
        (None, Some(train_path), Some(test_path), Some(models)) => {
            let models = existing_dir(&loaded.resolve(models), "model")?;
            let m_train = load_model(&existing_dir(&models.join(TRAIN_MODEL), "model")?)?;
            let m_test = load_model(&existing_dir(&models.join(TEST_MODEL), "model")?)?;
            let train_data = load_csv(&loaded.resolve(train_path), &schema)?;
            let test_data = load_csv_with(&loaded.resolve(test_path), &schema, &train_data.encoder)?.dataset;
            let tol = tolerance(&test_data, cfg.tolerance)?;
            sweep(&train_data.dataset, &test_data, &m_train, &m_test, &lambdas, &learner, cfg.repeats, Some(tol))?
        }
        _ => {
            return Err(Error::Config(
                "sweep needs either `data`, or all of `train`, `test` and `models`".into(),
            ))
        }
    };
    create_dir(out)?;
    let mut manifest = RunManifest::new("sweep", Some(cfg.seed), &loaded.raw)?;
    write(out, "metrics.csv", &table.to_csv(), &mut manifest)?;
    write(out, "timings.csv", &table.timings_csv(), &mut manifest)?;
    println!("sweep: {} rows over {} lambdas and {} repeats", table.rows.len(), lambdas.len(), cfg.repeats);
    manifest.finish(out)
}

#[derive(Debug, Serialize)]
pub struct AuditReport {
    pub task: Task,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub metrics: Metrics,
    /// Only for models where every atom has a single counterpart.
    pub deterministic: Option<DeterministicReport>,
}

pub fn audit(config: &Path, out: &Path, epsilon: Option<f64>, delta: Option<f64>) -> Result<()> {
    let loaded: config::Loaded<AuditConfig> = config::load(config)?;
    let cfg = &loaded.config;
    let schema = SchemaConfig::load(&loaded.resolve(&cfg.schema))?;
    let predictor_path = loaded.resolve(&cfg.predictor);
    if !predictor_path.is_file() {
        return Err(Error::Config(format!("predictor file {} does not exist", predictor_path.display())));
    }
    let h = LinearPredictor::load(&predictor_path)?;
    let data = match &cfg.encoder_from {
        Some(train) => {
            let encoder = load_csv(&loaded.resolve(train), &schema)?.encoder;
            load_csv_with(&loaded.resolve(&cfg.data), &schema, &encoder)?.dataset
        }
        None => load_csv(&loaded.resolve(&cfg.data), &schema)?.dataset,
    };
    let m = load_model(&existing_dir(&loaded.resolve(&cfg.model), "model")?)?;
    let mut flags = cfg.tolerance.unwrap_or(ToleranceConfig {
        epsilon: None,
        delta: None,
    });
    flags.epsilon = epsilon.or(flags.epsilon);
    flags.delta = delta.or(flags.delta);
    let tol = tolerance(&data, Some(flags))?;
    let metrics = evaluate(&h, &data, &m, tol)?;
    let deterministic = if m.is_deterministic() {
        Some(check_deterministic_cf(&h, &m)?)
    } else {
        None
    };
    let report = AuditReport {
        task: data.task(),
        n: data.n(),
        epsilon: tol.epsilon,
        delta: tol.delta,
        metrics,
        deterministic,
    };
    create_dir(out)?;
    let mut manifest = RunManifest::new("audit", None, &loaded.raw)?;
    write_json(out, "audit.json", &report, &mut manifest)?;
    let (perf, disp) = match report.task {
        Task::Classification => ("accuracy", "parity gap"),
        Task::Regression => ("mse", "ks distance"),
    };
    println!("audit: {perf} {:.6}", metrics.performance);
    println!("audit: {disp} {:.6}", metrics.disparity);
    println!("audit: cfr {:.6} (epsilon {}, delta {})", metrics.cfr, tol.epsilon, tol.delta);
    println!("audit: normalized variance {:.6}", metrics.normalized_variance);
    manifest.finish(out)
}

fn theorem_csv(rows: &[TheoremRow]) -> String {
    let mut text = String::from("n,seed_index,s,s_prime,mean_error,mean_displacement\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n, r.seed_index, r.s, r.s_prime, r.mean_error, r.mean_displacement
        ));
    }
    text
}

pub fn verify(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let loaded: config::Loaded<VerifyConfig> = config::load(config)?;
    let mut cfg = loaded.config.clone();
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let scm = LinearAdditiveScm::from_config(&cfg.scm)?;
    let rows = verify_theorem(&scm, cfg.s, cfg.s_prime, &cfg.sizes, cfg.seeds, cfg.seed)?;
    let summary = summarize(&rows);
    create_dir(out)?;
    let mut manifest = RunManifest::new("verify-theorem", Some(cfg.seed), &loaded.raw)?;
    write(out, "theorem.csv", &theorem_csv(&rows), &mut manifest)?;
    let mut text = String::from("n,median_error,median_displacement\n");
    for s in &summary {
        text.push_str(&format!("{},{},{}\n", s.n, s.median_error, s.median_displacement));
        println!(
            "verify-theorem: n = {:>6}  median error {:.6}  median displacement {:.6}",
            s.n, s.median_error, s.median_displacement
        );
    }
    write(out, "theorem_summary.csv", &text, &mut manifest)?;
    manifest.finish(out)
}
