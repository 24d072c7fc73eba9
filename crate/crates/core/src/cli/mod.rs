//! The `cftransport` command-line harness.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

pub use manifest::{RunManifest, RUN_MANIFEST};
pub use verify::{recovery_error, summarize, verify_theorem, TheoremRow, TheoremSummary};

#[derive(Debug, Parser)]
#[command(name = "cftransport", version, about = "Transport-based counterfactual models and fairness experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config for the command
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample train/test CSVs from a linear additive SCM
    Synth(Common),
    /// Fit optimal transport counterfactual models for a train/test split
    Couple(Common),
    /// Train one counterfactually regularized predictor
    Train(Common),
    /// Sweep the regularization strength and record all metrics
    Sweep(Common),
    /// Report fairness metrics of a saved predictor
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Compare the barycentric OT map with the structural counterfactual map
    VerifyTheorem(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Synth(c) | Command::Couple(c) | Command::Train(c) | Command::Sweep(c) | Command::VerifyTheorem(c) => c,
            Command::Audit { common, .. } => common,
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let common = cli.command.common();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        let (config, out, seed) = (&common.config, &common.out, common.seed);
        match &cli.command {
            Command::Synth(_) => commands::synth(config, out, seed),
            Command::Couple(_) => commands::couple(config, out),
            Command::Train(_) => commands::train_cmd(config, out, seed),
            Command::Sweep(_) => commands::sweep_cmd(config, out, seed),
            Command::Audit { epsilon, delta, .. } => commands::audit(config, out, *epsilon, *delta),
            Command::VerifyTheorem(_) => commands::verify(config, out, seed),
        }
    })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
