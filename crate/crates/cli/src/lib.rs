//! Command-line front end for `proxi-kmeans`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use proxi_kmeans::{Mode, ProximityParams, DEFAULT_TOLERANCE};
use serde::{Deserialize, Serialize};

pub mod gen;
pub mod lloyd;
pub mod oracle;
pub mod solve;
pub mod verify;

pub use solve::{run_solve, SolveArgs, SolveReport};

/// Environment variable that overrides the oracle and tree node budgets.
pub const BUDGET_ENV: &str = "PROXI_KMEANS_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "proxi-kmeans", version, about = "Exact k-means under alpha-center proximity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Find the cheapest feasible clustering of a points CSV.
    Solve(SolveArgs),
    /// Check a labeling against the proximity certificates.
    Verify(verify::VerifyArgs),
    /// Write a synthetic instance.
    #[command(subcommand)]
    Gen(gen::GenCommand),
    /// Exhaustive optimum for small inputs.
    Oracle(oracle::OracleArgs),
    /// Solve over a descending grid of alpha values.
    AlphaSweep(solve::SweepArgs),
    /// Re-run a solve from its manifest.
    Replay(solve::ReplayArgs),
}

/// How a command finished when it did not fail outright.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// No feasible clustering, or a failed certificate.
    Negative,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Negative => 2,
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Solve(args) => solve::cmd_solve(args),
        Command::Verify(args) => verify::cmd_verify(&args),
        Command::Gen(cmd) => gen::cmd_gen(&cmd),
        Command::Oracle(args) => oracle::cmd_oracle(&args),
        Command::AlphaSweep(args) => solve::cmd_alpha_sweep(&args),
        Command::Replay(args) => solve::cmd_replay(&args),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Balanced,
    Gamma,
    Outliers,
    List,
}

/// Constraint parameters shared by `solve`, `oracle` and `alpha-sweep`.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ParamArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub alpha: f64,
    /// Balance: every cluster holds at least omega*n/k points.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Outliers removed in outliers mode.
    #[arg(long, default_value_t = 0)]
    pub z: usize,
    /// Bound on the max/min mean distance ratio (gamma mode, tree source).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub beta1: f64,
    /// Outliers set aside in list mode (defaults to --z).
    #[arg(long)]
    pub beta: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Balanced)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
}

impl ParamArgs {
    pub fn mode(&self) -> Result<Mode> {
        if self.z > 0 && !matches!(self.mode, ModeArg::Outliers | ModeArg::List) {
            bail!("--z needs --mode outliers or list");
        }
        Ok(match self.mode {
            ModeArg::Balanced => Mode::Balanced,
            ModeArg::Gamma => Mode::Gamma,
            ModeArg::Outliers => Mode::Outliers,
            ModeArg::List => Mode::List {
                beta: self.beta.unwrap_or(self.z),
            },
        })
    }

    pub fn params(&self) -> Result<ProximityParams> {
        let mut p = ProximityParams::new(self.alpha)?
            .with_omega(self.omega)?
            .with_beta1(self.beta1)?
            .with_tolerance(self.tolerance)?
            .with_outliers(self.z);
        if let Some(g) = self.gamma {
            p = p.with_gamma(g)?;
        }
        p.validate()?;
        Ok(p)
    }
}

/// Budget from [`BUDGET_ENV`], if set.
pub fn env_budget() -> Result<Option<u64>> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => {
            let b: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("{BUDGET_ENV}={v:?} is not a number"))?;
            if b.is_nan() || b < 1.0 || b > u64::MAX as f64 {
                bail!("{BUDGET_ENV}={v:?} is out of range");
            }
            Ok(Some(b as u64))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context(BUDGET_ENV),
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Cluster labels as written to CSV and JSON: 0 for outliers, 1..=k otherwise.
pub fn one_based(labels: &[Option<usize>]) -> Vec<usize> {
    labels.iter().map(|l| l.map_or(0, |c| c + 1)).collect()
}

pub fn labels_csv(labels: &[Option<usize>]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    proxi_kmeans::io::write_labels(labels, &mut buf)?;
    Ok(buf)
}
