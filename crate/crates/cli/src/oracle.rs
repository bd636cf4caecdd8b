//! `oracle`: exhaustive optimum for small inputs.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use proxi_kmeans::oracle::{oracle_solve, OracleBudget};
use proxi_kmeans::solver::Mode;
use proxi_kmeans::{Point, ProximityParams};
use serde::{Deserialize, Serialize};

use crate::{env_budget, labels_csv, one_based, to_json, write_atomic, Outcome, ParamArgs};

#[derive(Args, Clone, Debug)]
pub struct OracleArgs {
    /// Headerless points CSV.
    pub input: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Largest n accepted.
    #[arg(long, default_value_t = OracleBudget::default().max_n)]
    pub max_n: usize,
    /// JSON destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Labels CSV destination for the optimum.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBest {
    pub labels: Vec<usize>,
    pub means: Vec<Point>,
    pub outliers: Vec<usize>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub k: usize,
    pub mode: Mode,
    pub params: ProximityParams,
    pub enumerated: u64,
    pub feasible_unlabeled: u64,
    pub feasible_labeled: u128,
    pub best: Option<OracleBest>,
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<Outcome> {
    let data =
        proxi_kmeans::io::read_points(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let params = args.params.params()?;
    let mode = args.params.mode()?;
    let mut budget = OracleBudget {
        max_n: args.max_n,
        ..OracleBudget::default()
    };
    if let Some(b) = env_budget()? {
        budget.max_partitions = b as u128;
    }
    let r = oracle_solve(&data, args.params.k, &params, mode, budget)?;
    let report = OracleReport {
        n: data.len(),
        k: args.params.k,
        mode,
        params,
        enumerated: r.enumerated,
        feasible_unlabeled: r.feasible_unlabeled,
        feasible_labeled: r.feasible_labeled,
        best: r.best.as_ref().map(|c| OracleBest {
            labels: one_based(&c.labels),
            means: c.means.clone(),
            outliers: c.outliers.clone(),
            cost: c.cost,
        }),
    };
    if let (Some(path), Some(c)) = (&args.labels, &r.best) {
        write_atomic(path, &labels_csv(&c.labels)?)?;
    }
    let json = to_json(&report)?;
    match &args.out {
        Some(p) => write_atomic(p, &json)?,
        None => print!("{}", String::from_utf8(json)?),
    }
    Ok(if report.best.is_some() { Outcome::Success } else { Outcome::Negative })
}
