//! `solve`, `replay` and `alpha-sweep`.

use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use proxi_kmeans::candidates::{read_checkpoint, CandidateTuple, Provenance};
use proxi_kmeans::geometry::{achieved_alpha, check_center_proximity, check_outlier_proximity, Certificate, Dataset};
use proxi_kmeans::peeling::{grow_tree_partial, theory_report, TheoryReport, TreeConfig};
use proxi_kmeans::rng::{stream, stream_rng};
use proxi_kmeans::sampler::{self, candidate_list, uniform_sample, SampleConfig, SampleSizeRule};
use proxi_kmeans::solver::{solve, Mode, SolveOptions, SolveRequest};
use proxi_kmeans::{Point, ProximityParams};
use serde::{Deserialize, Serialize};

use crate::lloyd::{lloyd_baseline, LloydReport};
use crate::{env_budget, labels_csv, one_based, to_json, write_atomic, Outcome, ParamArgs};

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Partitions of uniform samples.
    Sampler,
    /// Peeling-and-enclosing tree.
    Tree,
    /// JSONL candidate file (--candidates).
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MFormula {
    Derived,
    Literal,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SolveArgs {
    /// Headerless points CSV.
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value_t = Source::Sampler)]
    pub candidate_source: Source,
    /// Candidate file for --candidate-source file.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Sampler sample size; overrides --m-formula.
    #[arg(long)]
    pub sample_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = MFormula::Derived)]
    pub m_formula: MFormula,
    /// Refuse sampler runs that would enumerate more candidates than this.
    #[arg(long, default_value_t = 100_000_000)]
    pub max_candidates: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent sampler (or tree) runs; the overall best is kept.
    #[arg(long, default_value_t = 1)]
    pub repeats: u32,
    /// Worker threads for candidate evaluation (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 8)]
    pub tree_sample_size: usize,
    #[arg(long, default_value_t = 8)]
    pub grid_density: usize,
    /// Tree node budget (default: $PROXI_KMEANS_BUDGET or 1e6).
    #[arg(long)]
    pub node_budget: Option<u64>,
    /// Also run seeded k-means++/Lloyd and report it for comparison.
    #[arg(long)]
    pub lloyd: bool,
    /// Print the paper-scale parameters as JSON and exit.
    #[arg(long)]
    #[serde(default)]
    pub theory_report: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestReport {
    pub labels: Vec<usize>,
    pub means: Vec<Point>,
    pub outliers: Vec<usize>,
    pub sizes: Vec<usize>,
    pub cost: f64,
    pub candidate_cost: f64,
    pub candidate_index: u64,
    pub provenance: Provenance,
    pub achieved_alpha: f64,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeReport {
    pub epsilon: f64,
    pub sample_size: usize,
    pub grid_density: usize,
    pub node_budget: u64,
    pub zeta_count: usize,
    pub nodes: u64,
    pub leaves: u64,
    pub emitted: u64,
    pub truncated: bool,
}

/// Everything `solve` writes to `result.json`. Contains no timing or
/// paths, so reruns are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: String,
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    pub mode: Mode,
    pub params: ProximityParams,
    pub candidate_source: Source,
    pub seed: u64,
    pub repeats: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeReport>,
    pub candidates_scanned: u64,
    pub feasible_count: u64,
    pub best: Option<BestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lloyd: Option<LloydReport>,
}

impl SolveReport {
    pub fn feasible(&self) -> bool {
        self.best.is_some()
    }

    pub fn labels(&self) -> Option<Vec<Option<usize>>> {
        self.best
            .as_ref()
            .map(|b| b.labels.iter().map(|&l| l.checked_sub(1)).collect())
    }
}

impl SolveArgs {
    fn node_budget(&self) -> Result<u64> {
        Ok(match self.node_budget {
            Some(b) => b,
            None => env_budget()?.unwrap_or(DEFAULT_NODE_BUDGET),
        })
    }

    fn sample_rule(&self) -> SampleSizeRule {
        match (self.sample_size, self.m_formula) {
            (Some(m), _) => SampleSizeRule::Explicit(m),
            (None, MFormula::Derived) => SampleSizeRule::Derived,
            (None, MFormula::Literal) => SampleSizeRule::PaperLiteral,
        }
    }
}

fn certificate(data: &Dataset, c: &proxi_kmeans::Clustering, params: &ProximityParams, z: usize) -> Certificate {
    if z == 0 {
        check_center_proximity(data, c, params.alpha, params.tolerance)
    } else {
        check_outlier_proximity(data, c, z, params.alpha, params.tolerance)
    }
}

fn sampler_candidates(
    data: &Dataset,
    args: &SolveArgs,
    k: usize,
    params: &ProximityParams,
    mode: Mode,
) -> Result<(SampleConfig, Vec<Vec<usize>>)> {
    let bucket = mode.outliers(params) > 0;
    let config = SampleConfig::resolve(args.sample_rule(), k, params, bucket)?;
    let total = config.stream_len().saturating_mul(args.repeats as u128);
    if total > args.max_candidates as u128 {
        bail!(
            "sample size m = {} gives {total} candidates over {} repeats, above --max-candidates {}; pass a smaller --sample-size",
            config.m,
            args.repeats,
            args.max_candidates
        );
    }
    let samples = (0..args.repeats)
        .map(|r| {
            let mut rng = stream_rng(args.seed, stream::SAMPLER + r as u64);
            uniform_sample(&mut rng, data.len(), config.m)
        })
        .collect::<proxi_kmeans::Result<Vec<_>>>()?;
    Ok((config, samples))
}

fn tree_candidates(
    data: &Dataset,
    args: &SolveArgs,
    k: usize,
    params: &ProximityParams,
) -> Result<(Vec<CandidateTuple>, TreeReport)> {
    let gamma = params.gamma.context("--candidate-source tree needs --gamma")?;
    let budget = args.node_budget()?;
    let mut out = Vec::new();
    let mut report = TreeReport {
        epsilon: args.epsilon,
        sample_size: args.tree_sample_size,
        grid_density: args.grid_density,
        node_budget: budget,
        zeta_count: 0,
        nodes: 0,
        leaves: 0,
        emitted: 0,
        truncated: false,
    };
    for r in 0..args.repeats.max(1) {
        let cfg = TreeConfig::new(
            data,
            k,
            params.alpha,
            gamma,
            args.epsilon,
            args.tree_sample_size,
            args.grid_density,
            budget,
            args.seed.wrapping_add(r as u64),
        )?;
        report.zeta_count = cfg.zeta_schedule.len();
        let mut run = Vec::new();
        let stats = grow_tree_partial(data, &cfg, |t| run.push(t))?;
        report.truncated |= stats.truncated.iter().any(|&t| t);
        report.nodes += stats.nodes;
        report.leaves += stats.leaves;
        report.emitted += stats.emitted;
        out.extend(run);
    }
    Ok((out, report))
}

/// Runs the pipeline without touching the output directory.
pub fn run_solve(args: &SolveArgs) -> Result<SolveReport> {
    let data = proxi_kmeans::io::read_points(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    solve_data(&data, args)
}

pub fn solve_data(data: &Dataset, args: &SolveArgs) -> Result<SolveReport> {
    let params = args.params.params()?;
    let mode = args.params.mode()?;
    let k = args.params.k;
    if args.repeats == 0 {
        bail!("--repeats must be positive");
    }
    let req = SolveRequest::new(data, k, params.clone(), mode)?;
    let opts = SolveOptions {
        threads: args.threads,
        ..SolveOptions::default()
    };

    let mut sample_size = None;
    let mut tree = None;
    let result = match args.candidate_source {
        Source::Sampler => {
            let (config, samples) = sampler_candidates(data, args, k, &params, mode)?;
            sample_size = Some(config.m);
            let streams = samples
                .iter()
                .enumerate()
                .map(|(r, s)| candidate_list(data, s, &config, r as u32))
                .collect::<proxi_kmeans::Result<Vec<_>>>()?;
            solve(&req, streams.into_iter().flatten(), &opts)?
        }
        Source::Tree => {
            let (cands, report) = tree_candidates(data, args, k, &params)?;
            tree = Some(report);
            solve(&req, cands, &opts)?
        }
        Source::File => {
            let path = args.candidates.as_ref().context("--candidate-source file needs --candidates")?;
            let cands = read_checkpoint(path).with_context(|| format!("reading {}", path.display()))?;
            solve(&req, cands, &opts)?
        }
    };

    let z = mode.outliers(&params);
    let best = result.best.map(|b| BestReport {
        labels: one_based(&b.clustering.labels),
        sizes: b.clustering.sizes(),
        achieved_alpha: achieved_alpha(data, &b.clustering),
        certificate: certificate(data, &b.clustering, &params, z),
        means: b.clustering.means,
        outliers: b.clustering.outliers,
        cost: b.clustering.cost,
        candidate_cost: b.candidate_cost,
        candidate_index: b.index,
        provenance: b.provenance,
    });
    let list = matches!(mode, Mode::List { .. }).then(|| result.list.iter().map(|c| one_based(&c.labels)).collect());
    let lloyd = if args.lloyd {
        Some(lloyd_baseline(data, k, &params, args.seed)?)
    } else {
        None
    };
    Ok(SolveReport {
        status: if best.is_some() { "feasible" } else { "infeasible" }.to_string(),
        n: data.len(),
        dim: data.dim(),
        k,
        mode,
        params,
        candidate_source: args.candidate_source,
        seed: args.seed,
        repeats: args.repeats,
        sample_size,
        tree,
        candidates_scanned: result.candidates_scanned,
        feasible_count: result.feasible_count,
        best,
        list,
        lloyd,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: f64,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Outputs {
    pub labels: Option<PathBuf>,
    pub result: PathBuf,
    pub manifest: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub status: String,
    pub cost: Option<f64>,
    pub candidates_scanned: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub args: SolveArgs,
    pub outputs: Outputs,
    pub summary: Summary,
    pub timing: Timing,
}

pub const LABELS_FILE: &str = "labels.csv";
pub const RESULT_FILE: &str = "result.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn theory(args: &SolveArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Theory {
        sampler_m_derived: f64,
        sampler_m_literal: f64,
        tree: Option<TheoryReport>,
    }
    let p = args.params.params()?;
    let k = args.params.k;
    let t = Theory {
        sampler_m_derived: sampler::derived_sample_size(k, p.omega, p.delta, p.beta1),
        sampler_m_literal: sampler::paper_literal_sample_size(k, p.omega, p.alpha, p.beta1),
        tree: p.gamma.map(|g| theory_report(k, p.alpha, g)).transpose()?,
    };
    print!("{}", String::from_utf8(to_json(&t)?)?);
    Ok(())
}

pub fn cmd_solve(mut args: SolveArgs) -> Result<Outcome> {
    if args.theory_report {
        theory(&args)?;
        return Ok(Outcome::Success);
    }
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    args.input = fs::canonicalize(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    if args.candidate_source == Source::Tree {
        args.node_budget = Some(args.node_budget()?);
    }
    if let Some(c) = &args.candidates {
        args.candidates = Some(fs::canonicalize(c).with_context(|| format!("reading {}", c.display()))?);
    }
    let report = run_solve(&args)?;

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let labels_path = args.out_dir.join(LABELS_FILE);
    let result_path = args.out_dir.join(RESULT_FILE);
    let manifest_path = args.out_dir.join(MANIFEST_FILE);
    let labels = report.labels();
    if let Some(l) = &labels {
        write_atomic(&labels_path, &labels_csv(l)?)?;
    }
    write_atomic(&result_path, &to_json(&report)?)?;
    let manifest = RunManifest {
        command: "solve".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        outputs: Outputs {
            labels: labels.is_some().then(|| labels_path.clone()),
            result: result_path.clone(),
            manifest: manifest_path.clone(),
        },
        summary: Summary {
            status: report.status.clone(),
            cost: report.best.as_ref().map(|b| b.cost),
            candidates_scanned: report.candidates_scanned,
        },
        timing: Timing {
            started_unix: started,
            elapsed_seconds: clock.elapsed().as_secs_f64(),
        },
        args,
    };
    write_atomic(&manifest_path, &to_json(&manifest)?)?;

    match &report.best {
        Some(b) => {
            eprintln!(
                "feasible: cost {} after {} candidates ({} feasible)",
                b.cost, report.candidates_scanned, report.feasible_count
            );
            Ok(Outcome::Success)
        }
        None => {
            eprintln!("no feasible clustering among {} candidates", report.candidates_scanned);
            Ok(Outcome::Negative)
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct ReplayArgs {
    /// Manifest written by `solve`.
    pub manifest: PathBuf,
    /// Output directory (default: the recorded one).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn read_manifest(path: &std::path::Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<Outcome> {
    let manifest = read_manifest(&args.manifest)?;
    if manifest.command != "solve" {
        bail!("cannot replay a {:?} manifest", manifest.command);
    }
    let mut solve_args = manifest.args;
    if let Some(d) = &args.out_dir {
        solve_args.out_dir = d.clone();
    }
    if args.threads.is_some() {
        solve_args.threads = args.threads;
    }
    cmd_solve(solve_args)
}

#[derive(Args, Clone, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Explicit alpha grid; otherwise a linear grid from --alpha down to --alpha-min.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 1.05)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub feasible: bool,
    pub cost: Option<f64>,
}

impl SweepArgs {
    pub fn grid(&self) -> Result<Vec<f64>> {
        let mut grid = if self.alphas.is_empty() {
            let hi = self.solve.params.alpha;
            let lo = self.alpha_min;
            if !(lo > 1.0 && hi >= lo) || self.steps == 0 {
                bail!("need alpha >= alpha-min > 1 and steps >= 1");
            }
            if self.steps == 1 {
                vec![hi]
            } else {
                (0..self.steps)
                    .map(|i| hi - (hi - lo) * i as f64 / (self.steps - 1) as f64)
                    .collect()
            }
        } else {
            self.alphas.clone()
        };
        grid.sort_by(|a, b| b.total_cmp(a));
        grid.dedup();
        Ok(grid)
    }
}

/// Solves at each alpha of the grid, largest first.
pub fn alpha_sweep(data: &Dataset, args: &SweepArgs) -> Result<Vec<SweepRow>> {
    args.grid()?
        .into_iter()
        .map(|alpha| {
            let mut a = args.solve.clone();
            a.params.alpha = alpha;
            let r = solve_data(data, &a)?;
            Ok(SweepRow {
                alpha,
                feasible: r.feasible(),
                cost: r.best.map(|b| b.cost),
            })
        })
        .collect()
}

pub fn cmd_alpha_sweep(args: &SweepArgs) -> Result<Outcome> {
    let data = proxi_kmeans::io::read_points(&args.solve.input)
        .with_context(|| format!("reading {}", args.solve.input.display()))?;
    let rows = alpha_sweep(&data, args)?;
    let mut csv = String::from("alpha,feasible,cost\n");
    for r in &rows {
        let cost = r.cost.map(|c| c.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{}\n", r.alpha, r.feasible, cost));
    }
    match &args.out {
        Some(p) => write_atomic(p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    match rows.iter().find(|r| r.feasible) {
        Some(r) => {
            eprintln!("largest feasible alpha: {}", r.alpha);
            Ok(Outcome::Success)
        }
        None => {
            eprintln!("no alpha in the grid is feasible");
            Ok(Outcome::Negative)
        }
    }
}
