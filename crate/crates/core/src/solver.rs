//! Candidate evaluation: nearest-center assignment, feasibility filtering and
//! a deterministic minimum over the candidate stream.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{CandidateTuple, Provenance};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    check_center_proximity, check_outlier_proximity, dist, nearest_center, Clustering, Dataset, Violation,
};
use crate::params::ProximityParams;

/// Which constraint family a solve enforces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    /// Balance and center proximity.
    Balanced,
    /// Center proximity and a bound on the max/min mean distance ratio.
    Gamma,
    /// Balance and center proximity with `params.z` outliers.
    Outliers,
    /// Every feasible clustering with `beta` points set aside as outliers.
    List { beta: usize },
}

impl Mode {
    /// Number of points removed as outliers.
    pub fn outliers(&self, params: &ProximityParams) -> usize {
        match self {
            Mode::Balanced | Mode::Gamma => 0,
            Mode::Outliers => params.z,
            Mode::List { beta } => *beta,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveRequest<'a> {
    pub data: &'a Dataset,
    pub k: usize,
    pub params: ProximityParams,
    pub mode: Mode,
}

impl<'a> SolveRequest<'a> {
    pub fn new(data: &'a Dataset, k: usize, params: ProximityParams, mode: Mode) -> Result<Self> {
        let r = Self { data, k, params, mode };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.k == 0 {
            return Err(invalid("k must be positive"));
        }
        let z = self.mode.outliers(&self.params);
        if z >= self.data.len() {
            return Err(invalid(format!(
                "{z} outliers leave no points among {}",
                self.data.len()
            )));
        }
        if self.k > self.data.len() - z {
            return Err(invalid(format!(
                "k = {} exceeds the {} points to cluster",
                self.k,
                self.data.len() - z
            )));
        }
        if self.mode == Mode::Gamma && self.params.gamma.is_none() {
            return Err(invalid("gamma mode needs gamma"));
        }
        Ok(())
    }
}

/// Nearest-center labels for one candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub labels: Vec<Option<usize>>,
    /// Cost of the inliers against the candidate centers.
    pub candidate_cost: f64,
    pub sizes: Vec<usize>,
}

impl Assignment {
    /// The induced clustering, or `None` when some cluster is empty.
    pub fn clustering(&self, data: &Dataset) -> Option<Clustering> {
        if self.sizes.contains(&0) {
            return None;
        }
        Clustering::from_labels(data, self.labels.clone(), self.sizes.len()).ok()
    }
}

/// Labels every point by its nearest center; ties go to the lowest index.
pub fn assign<P: AsRef<[f64]>>(data: &Dataset, centers: &[P]) -> Result<Assignment> {
    assign_with_outliers(data, centers, 0)
}

/// Removes the `z` points farthest from their nearest center (ties: higher
/// point index first) and labels the rest as in [`assign`].
pub fn assign_with_outliers<P: AsRef<[f64]>>(data: &Dataset, centers: &[P], z: usize) -> Result<Assignment> {
    if centers.is_empty() {
        return Err(Error::Empty("center list"));
    }
    if z >= data.len() {
        return Err(invalid(format!("z = {z} must be below n = {}", data.len())));
    }
    if let Some(c) = centers.iter().find(|c| c.as_ref().len() != data.dim()) {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: c.as_ref().len(),
        });
    }
    let nearest: Vec<(usize, f64)> = data.points().iter().map(|p| nearest_center(p, centers)).collect();
    let mut labels: Vec<Option<usize>> = nearest.iter().map(|&(c, _)| Some(c)).collect();
    if z > 0 {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| nearest[b].1.total_cmp(&nearest[a].1).then(b.cmp(&a)));
        for &i in &order[..z] {
            labels[i] = None;
        }
    }
    let mut sizes = vec![0; centers.len()];
    let mut cost = 0.0;
    for (l, &(_, d)) in labels.iter().zip(&nearest) {
        if let Some(c) = l {
            sizes[*c] += 1;
            cost += d;
        }
    }
    Ok(Assignment {
        labels,
        candidate_cost: cost,
        sizes,
    })
}

/// Why a clustering was rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    EmptyCluster { cluster: usize },
    TooSmall { cluster: usize, size: usize, min: usize },
    NotProximal { violation: Violation },
    GammaRatio { ratio: f64, gamma: f64 },
}

/// Max over min pairwise distance of the means; 1 for fewer than two means.
pub fn mean_distance_ratio(means: &[Vec<f64>]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (i, a) in means.iter().enumerate() {
        for b in &means[i + 1..] {
            let d = dist(a, b);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    if means.len() < 2 {
        1.0
    } else if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// The mode's feasibility predicate, evaluated on the clustering's own means.
/// Shared by the solver and the oracle.
pub fn feasible(data: &Dataset, clustering: &Clustering, params: &ProximityParams, mode: Mode) -> Result<(), Rejection> {
    let sizes = clustering.sizes();
    if let Some(cluster) = sizes.iter().position(|&s| s == 0) {
        return Err(Rejection::EmptyCluster { cluster });
    }
    let balanced = !matches!(mode, Mode::Gamma);
    if balanced {
        let min = params.min_cluster_size(data.len(), clustering.k);
        if let Some((cluster, &size)) = sizes.iter().enumerate().find(|(_, &s)| s < min) {
            return Err(Rejection::TooSmall { cluster, size, min });
        }
    }
    let z = mode.outliers(params);
    let cert = if z == 0 {
        check_center_proximity(data, clustering, params.alpha, params.tolerance)
    } else {
        check_outlier_proximity(data, clustering, z, params.alpha, params.tolerance)
    };
    if let Some(violation) = cert.violation {
        return Err(Rejection::NotProximal { violation });
    }
    if mode == Mode::Gamma {
        let gamma = params.gamma.unwrap_or(f64::INFINITY);
        let ratio = mean_distance_ratio(&clustering.means);
        if ratio > gamma {
            return Err(Rejection::GammaRatio { ratio, gamma });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Best {
    pub clustering: Clustering,
    /// Cost against the candidate centers; the running-minimum key.
    pub candidate_cost: f64,
    /// Position in the candidate stream.
    pub index: u64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub best: Option<Best>,
    pub candidates_scanned: u64,
    pub feasible_count: u64,
    /// List mode only: distinct feasible clusterings in stream order.
    pub list: Vec<Clustering>,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub batch_size: usize,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            batch_size: 4096,
            threads: None,
        }
    }
}

struct Evaluated {
    index: u64,
    candidate_cost: f64,
    clustering: Option<Clustering>,
    provenance: Provenance,
}

fn evaluate(req: &SolveRequest, index: u64, tuple: CandidateTuple) -> Result<Evaluated> {
    tuple.validate(req.k, req.data.dim())?;
    let a = assign_with_outliers(req.data, &tuple.centers, req.mode.outliers(&req.params))?;
    let clustering = a
        .clustering(req.data)
        .filter(|c| feasible(req.data, c, &req.params, req.mode).is_ok());
    Ok(Evaluated {
        index,
        candidate_cost: a.candidate_cost,
        clustering,
        provenance: tuple.provenance,
    })
}

fn better(a: &Evaluated, b: &Best) -> bool {
    match a.candidate_cost.total_cmp(&b.candidate_cost) {
        Ordering::Less => true,
        Ordering::Equal => a.index < b.index,
        Ordering::Greater => false,
    }
}

/// Scans the candidates and keeps the feasible clustering of least
/// candidate cost, the earliest on ties. The result does not depend on the
/// thread count or batch size.
pub fn solve<I>(req: &SolveRequest, candidates: I, opts: &SolveOptions) -> Result<SolveResult>
where
    I: IntoIterator<Item = CandidateTuple>,
{
    req.validate()?;
    let pool = match opts.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| invalid(e.to_string()))?,
        ),
        None => None,
    };
    let eval_batch = |start: u64, batch: Vec<CandidateTuple>| -> Result<Vec<Evaluated>> {
        let run = || {
            batch
                .into_par_iter()
                .enumerate()
                .map(|(i, t)| evaluate(req, start + i as u64, t))
                .collect::<Result<Vec<_>>>()
        };
        match &pool {
            Some(p) => p.install(run),
            None => run(),
        }
    };

    let list_mode = matches!(req.mode, Mode::List { .. });
    let mut result = SolveResult::default();
    let mut seen: HashSet<Vec<Option<usize>>> = HashSet::new();
    let mut iter = candidates.into_iter();
    let batch_size = opts.batch_size.max(1);
    loop {
        let batch: Vec<CandidateTuple> = iter.by_ref().take(batch_size).collect();
        if batch.is_empty() {
            break;
        }
        let start = result.candidates_scanned;
        result.candidates_scanned += batch.len() as u64;
        for e in eval_batch(start, batch)? {
            let Some(clustering) = &e.clustering else { continue };
            result.feasible_count += 1;
            if list_mode && seen.insert(clustering.canonical_labels()) {
                result.list.push(clustering.clone());
            }
            if result.best.as_ref().is_none_or(|b| better(&e, b)) {
                result.best = Some(Best {
                    clustering: clustering.clone(),
                    candidate_cost: e.candidate_cost,
                    index: e.index,
                    provenance: e.provenance.clone(),
                });
            }
        }
    }
    Ok(result)
}

/// List mode: all distinct feasible clusterings with `beta` outliers.
pub fn solve_list_beta<I>(
    data: &Dataset,
    k: usize,
    params: ProximityParams,
    beta: usize,
    candidates: I,
    opts: &SolveOptions,
) -> Result<Vec<Clustering>>
where
    I: IntoIterator<Item = CandidateTuple>,
{
    let req = SolveRequest::new(data, k, params, Mode::List { beta })?;
    Ok(solve(&req, candidates, opts)?.list)
}
