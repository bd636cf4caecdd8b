//! Peeling-and-enclosing candidate tree.
//!
//! For each scale `zeta` of a geometric schedule a depth-`k` tree is grown.
//! A node at height `j` carries the approximate centers `p_1..p_j` of its
//! root path. Its children are found by peeling balls of each candidate
//! radius around those centers, sampling the survivors, and enumerating grid
//! points of the simplices spanned by the path centers and each subset mean
//! of the sample. Every root-to-leaf path is a candidate tuple.

use std::collections::HashSet;

use rand::seq::index::sample as sample_indices;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{CandidateTuple, Provenance};
use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, Dataset, Point};
use crate::rng::{stream, stream_rng};

/// Largest sample for which all subset means are enumerated.
pub const MAX_SUBSET_SAMPLE: usize = 20;

const MEAN_DEDUP_STEP: f64 = 1e-12;
const TUPLE_DEDUP_STEP: f64 = 1e-9;

/// `((alpha-1)^2 k / (4 alpha gamma (1+k)))^2`, before any cap.
pub fn raw_epsilon(k: usize, alpha: f64, gamma: f64) -> f64 {
    let k = k as f64;
    ((alpha - 1.0).powi(2) * k / (4.0 * alpha * gamma * (1.0 + k))).powi(2)
}

/// The raw value capped at `1 / (4 k^2)`, which the peeling bound requires.
pub fn derived_epsilon(k: usize, alpha: f64, gamma: f64) -> f64 {
    raw_epsilon(k, alpha, gamma).min(1.0 / (4.0 * (k * k) as f64))
}

/// `(8 k^3 / eps^9) ln(k^2 / eps^6)`, unrounded; usually far beyond `usize`.
pub fn derived_sample_size(k: usize, epsilon: f64) -> f64 {
    let k = k as f64;
    (8.0 * k.powi(3) / epsilon.powi(9) * (k * k / epsilon.powi(6)).ln()).ceil()
}

/// `zeta_i = (1+eps)^i * alpha/(alpha+1)^2 * R/gamma` for
/// `i = 0..=ceil(log_{1+eps}(gamma (alpha+1)/(alpha-1)))`, where `R` is the
/// data diameter. The last value reaches `alpha/(alpha^2-1) * R`, which bounds
/// `rad_min` whenever `gamma` is at least the true mean-distance ratio; with
/// `gamma` equal to that ratio the upper end of [`rad_min_bounds`] suffices.
pub fn zeta_schedule(r_diameter: f64, alpha: f64, gamma: f64, epsilon: f64) -> Result<Vec<f64>> {
    if !(r_diameter > 0.0) {
        return Err(invalid("data diameter must be positive"));
    }
    let steps = zeta_steps(alpha, gamma, epsilon);
    let base = alpha / (alpha + 1.0).powi(2) * r_diameter / gamma;
    Ok((0..=steps).map(|i| (1.0 + epsilon).powi(i as i32) * base).collect())
}

fn zeta_steps(alpha: f64, gamma: f64, epsilon: f64) -> usize {
    ((gamma * (alpha + 1.0) / (alpha - 1.0)).ln() / (1.0 + epsilon).ln() - 1e-12)
        .ceil()
        .max(0.0) as usize
}

/// Interval guaranteed to contain `alpha/(alpha^2-1)` times the minimum
/// distance between the target means, given the data diameter, when `gamma`
/// is exactly their max/min distance ratio.
pub fn rad_min_bounds(r_diameter: f64, alpha: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(r_diameter > 0.0) {
        return Err(invalid("data diameter must be positive"));
    }
    if !(alpha > 1.0) || !(gamma >= 1.0) {
        return Err(invalid("need alpha > 1 and gamma >= 1"));
    }
    Ok((
        alpha / (alpha + 1.0).powi(2) * r_diameter / gamma,
        alpha / (alpha * alpha - 1.0) * r_diameter / gamma,
    ))
}

/// `alpha/(alpha^2-1)` times the minimum pairwise distance between `means`.
pub fn rad_min(means: &[Point], alpha: f64) -> Option<f64> {
    let mut best = f64::INFINITY;
    for (i, a) in means.iter().enumerate() {
        for b in &means[i + 1..] {
            best = best.min(dist(a, b));
        }
    }
    best.is_finite().then(|| alpha / (alpha * alpha - 1.0) * best)
}

/// Peeling radii for height `j`:
/// `(1 + l eps/2) / (2 (1+eps)) * j * sqrt(2) * sqrt(eps) * zeta * gamma`
/// for `l = 0..=floor(4 + 2/eps)`.
pub fn radius_candidates(j: usize, epsilon: f64, zeta: f64, gamma: f64) -> Vec<f64> {
    let top = (4.0 + 2.0 / epsilon + 1e-9).floor() as usize;
    let scale = j as f64 * 2f64.sqrt() * epsilon.sqrt() * zeta * gamma / (2.0 * (1.0 + epsilon));
    (0..=top)
        .map(|l| (1.0 + l as f64 * epsilon / 2.0) * scale)
        .collect()
}

/// Whether some radius candidate lands in
/// `[j sqrt(eps) gamma rad_min, (1 + eps/2) j sqrt(eps) gamma rad_min]`.
/// `None` when `zeta` is outside `[rad_min, (1+eps) rad_min]`, where no
/// such radius is promised.
pub fn claim_radius_holds(j: usize, epsilon: f64, zeta: f64, gamma: f64, rad_min: f64) -> Option<bool> {
    let slack = 1e-12 * rad_min;
    if zeta < rad_min - slack || zeta > (1.0 + epsilon) * rad_min + slack {
        return None;
    }
    let lo = j as f64 * epsilon.sqrt() * gamma * rad_min;
    let hi = (1.0 + epsilon / 2.0) * lo;
    let tol = 1e-12 * hi;
    Some(
        radius_candidates(j, epsilon, zeta, gamma)
            .iter()
            .any(|&r| r >= lo - tol && r <= hi + tol),
    )
}

/// Indices of points strictly farther than `radius` from every center.
pub fn peel<P: AsRef<[f64]>>(data: &Dataset, centers: &[P], radius: f64) -> Vec<usize> {
    (0..data.len())
        .filter(|&i| centers.iter().all(|c| dist(data.point(i), c.as_ref()) > radius))
        .collect()
}

fn quantize(p: &[f64], step: f64) -> Vec<i64> {
    p.iter().map(|v| (v / step).round() as i64).collect()
}

/// Means of all nonempty subsets, in subset-bitmask order, with duplicates
/// (within 1e-12 per coordinate) dropped.
pub fn subset_means<P: AsRef<[f64]>>(sample: &[P]) -> Result<Vec<Point>> {
    let s = sample.len();
    if s == 0 {
        return Err(Error::Empty("sample"));
    }
    if s > MAX_SUBSET_SAMPLE {
        return Err(Error::BudgetExceeded(format!(
            "subset enumeration over {s} points exceeds the cap of {MAX_SUBSET_SAMPLE}"
        )));
    }
    let dim = sample[0].as_ref().len();
    let total = 1usize << s;
    let mut sums = vec![0.0; total * dim];
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for mask in 1..total {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let p = sample[low].as_ref();
        for a in 0..dim {
            sums[mask * dim + a] = sums[rest * dim + a] + p[a];
        }
        let size = mask.count_ones() as f64;
        let m: Point = sums[mask * dim..(mask + 1) * dim].iter().map(|v| v / size).collect();
        if seen.insert(quantize(&m, MEAN_DEDUP_STEP)) {
            out.push(m);
        }
    }
    Ok(out)
}

/// All barycentric lattice points `sum c_v / density * v` with nonnegative
/// integer `c` summing to `density`. Lattices of every face are included,
/// since they are the points with some `c_v = 0`.
pub fn simplex_grid<P: AsRef<[f64]>>(vertices: &[P], density: usize) -> Result<Vec<Point>> {
    if density == 0 {
        return Err(invalid("grid density must be positive"));
    }
    let j = vertices.len();
    if j == 0 {
        return Err(Error::Empty("simplex vertices"));
    }
    let dim = vertices[0].as_ref().len();
    let mut out = Vec::new();
    let mut coeffs = vec![0usize; j];
    fn rec<P: AsRef<[f64]>>(
        vertices: &[P],
        density: usize,
        dim: usize,
        pos: usize,
        left: usize,
        coeffs: &mut [usize],
        out: &mut Vec<Point>,
    ) {
        if pos + 1 == vertices.len() {
            coeffs[pos] = left;
            let mut p = vec![0.0; dim];
            for (c, v) in coeffs.iter().zip(vertices) {
                if *c > 0 {
                    let w = *c as f64 / density as f64;
                    for (a, x) in p.iter_mut().zip(v.as_ref()) {
                        *a += w * x;
                    }
                }
            }
            out.push(p);
            return;
        }
        for c in (0..=left).rev() {
            coeffs[pos] = c;
            rec(vertices, density, dim, pos + 1, left - c, coeffs, out);
        }
    }
    rec(vertices, density, dim, 0, density, &mut coeffs, &mut out);
    Ok(out)
}

/// Runtime parameters of the tree search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub sample_size: usize,
    pub grid_density: usize,
    pub zeta_schedule: Vec<f64>,
    /// Total number of tree nodes (over all schedule values) that may be created.
    pub node_budget: u64,
    pub seed: u64,
}

impl TreeConfig {
    /// Explicit runtime parameters, with the schedule derived from the data diameter.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        data: &Dataset,
        k: usize,
        alpha: f64,
        gamma: f64,
        epsilon: f64,
        sample_size: usize,
        grid_density: usize,
        node_budget: u64,
        seed: u64,
    ) -> Result<Self> {
        let r = data.diameter();
        let zeta_schedule = if r > 0.0 {
            zeta_schedule(r, alpha, gamma, epsilon)?
        } else {
            vec![0.0]
        };
        let cfg = Self {
            k,
            alpha,
            gamma,
            epsilon,
            sample_size,
            grid_density,
            zeta_schedule,
            node_budget,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k must be positive"));
        }
        if !(self.alpha > 1.0) {
            return Err(invalid("alpha must exceed 1"));
        }
        if !(self.gamma >= 1.0) {
            return Err(invalid("gamma must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if self.sample_size == 0 || self.sample_size > MAX_SUBSET_SAMPLE {
            return Err(invalid(format!(
                "tree sample size must lie in 1..={MAX_SUBSET_SAMPLE}"
            )));
        }
        if self.grid_density == 0 {
            return Err(invalid("grid density must be positive"));
        }
        if self.zeta_schedule.is_empty() {
            return Err(invalid("zeta schedule is empty"));
        }
        Ok(())
    }

    /// Upper bound on the children of a node at height `j`.
    pub fn children_bound(&self, j: usize) -> f64 {
        let radii = if j == 0 { 1.0 } else { radius_candidates(j, self.epsilon, 1.0, 1.0).len() as f64 };
        radii * 2f64.powi((self.sample_size + j) as i32) * ((self.grid_density + 1) as f64).powi(j as i32)
    }
}

/// Paper-scale parameter values, reported but never used to build a tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_raw: f64,
    pub epsilon: f64,
    pub sample_size: f64,
    pub zeta_count: usize,
    pub radius_count: usize,
    /// `ceil(32 j / (eps^2 / 4))` for `j = 1..k`.
    pub grid_density: Vec<f64>,
    /// log10 of the node-count bound of one tree.
    pub log10_tree_nodes: f64,
}

pub fn theory_report(k: usize, alpha: f64, gamma: f64) -> Result<TheoryReport> {
    if k == 0 || !(alpha > 1.0) || !(gamma >= 1.0) {
        return Err(invalid("need k >= 1, alpha > 1, gamma >= 1"));
    }
    let epsilon = derived_epsilon(k, alpha, gamma);
    let s = derived_sample_size(k, epsilon);
    let eps_lemma = epsilon * epsilon / 4.0;
    let grid_density: Vec<f64> = (1..=k).map(|j| (32.0 * j as f64 / eps_lemma).ceil()).collect();
    let radius_count = radius_candidates(1, epsilon, 1.0, 1.0).len();
    let zeta_count = zeta_steps(alpha, gamma, epsilon) + 1;
    // nodes at depth t: product of children bounds at heights 0..t
    let log_children = |j: usize| -> f64 {
        let radii = if j == 0 { 0.0 } else { (radius_count as f64).log10() };
        let dens = if j == 0 { 0.0 } else { j as f64 * (grid_density[j - 1] + 1.0).log10() };
        radii + (s + j as f64) * 2f64.log10() + dens
    };
    let mut depth_log = 0.0;
    let mut total_log = f64::NEG_INFINITY;
    for j in 0..k {
        depth_log += log_children(j);
        total_log = log10_add(total_log, depth_log);
    }
    Ok(TheoryReport {
        k,
        alpha,
        gamma,
        epsilon_raw: raw_epsilon(k, alpha, gamma),
        epsilon,
        sample_size: s,
        zeta_count,
        radius_count,
        grid_density,
        log10_tree_nodes: total_log,
    })
}

fn log10_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + 10f64.powf(lo - hi)).log10()
}

/// Counters for one run of [`grow_tree`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub nodes: u64,
    pub leaves: u64,
    pub emitted: u64,
    /// Per schedule value: whether its share of the budget ran out.
    pub truncated: Vec<bool>,
}

struct Grower<'a> {
    data: &'a Dataset,
    cfg: &'a TreeConfig,
    zeta: f64,
    zeta_index: u32,
    rng: ChaCha8Rng,
    budget: u64,
    nodes: u64,
    out: Vec<CandidateTuple>,
}

impl Grower<'_> {
    fn sample_means(&mut self, pool: &[usize]) -> Result<Vec<Point>> {
        if pool.is_empty() {
            return Ok(Vec::new());
        }
        let chosen: Vec<usize> = if pool.len() <= self.cfg.sample_size {
            pool.to_vec()
        } else {
            sample_indices(&mut self.rng, pool.len(), self.cfg.sample_size)
                .into_iter()
                .map(|i| pool[i])
                .collect()
        };
        subset_means(&self.data.select(&chosen))
    }

    fn children(&mut self, path: &[Point]) -> Result<Vec<Point>> {
        let j = path.len();
        if j == 0 {
            let all: Vec<usize> = (0..self.data.len()).collect();
            return self.sample_means(&all);
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut push_all = |pts: Vec<Point>, out: &mut Vec<Point>| {
            for p in pts {
                if seen.insert(quantize(&p, MEAN_DEDUP_STEP)) {
                    out.push(p);
                }
            }
        };
        for r in radius_candidates(j, self.cfg.epsilon, self.zeta, self.cfg.gamma) {
            let survivors = peel(self.data, path, r);
            for pi in self.sample_means(&survivors)? {
                let mut verts = path.to_vec();
                verts.push(pi);
                push_all(simplex_grid(&verts, self.cfg.grid_density)?, &mut out);
            }
            push_all(simplex_grid(path, self.cfg.grid_density)?, &mut out);
        }
        Ok(out)
    }

    /// Depth-first expansion. Returns `false` once the budget is spent.
    fn expand(&mut self, path: &mut Vec<Point>, ids: &mut Vec<u32>) -> Result<bool> {
        let kids = self.children(path)?;
        for (idx, child) in kids.into_iter().enumerate() {
            if self.nodes >= self.budget {
                return Ok(false);
            }
            self.nodes += 1;
            path.push(child);
            ids.push(idx as u32);
            let ok = if path.len() == self.cfg.k {
                self.out.push(CandidateTuple::new(
                    path.clone(),
                    Provenance::TreePath {
                        zeta: self.zeta_index,
                        path: ids.clone(),
                    },
                ));
                true
            } else {
                self.expand(path, ids)?
            };
            path.pop();
            ids.pop();
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Grows one tree per schedule value (in parallel) and feeds the leaves to
/// `sink` ordered by (schedule index, path), dropping tuples that repeat an
/// earlier one within 1e-9 per coordinate.
///
/// The node budget is split evenly across schedule values. If any tree runs
/// out, every leaf produced so far is still delivered and the call returns
/// [`Error::BudgetExceeded`].
pub fn grow_tree<F: FnMut(CandidateTuple)>(data: &Dataset, cfg: &TreeConfig, sink: F) -> Result<TreeStats> {
    let stats = grow_tree_partial(data, cfg, sink)?;
    if stats.truncated.iter().any(|&t| t) {
        return Err(Error::BudgetExceeded(format!(
            "tree node budget {} exhausted after {} nodes; {} candidates delivered",
            cfg.node_budget, stats.nodes, stats.emitted
        )));
    }
    Ok(stats)
}

/// As [`grow_tree`], but reports budget exhaustion only through
/// [`TreeStats::truncated`].
pub fn grow_tree_partial<F: FnMut(CandidateTuple)>(data: &Dataset, cfg: &TreeConfig, mut sink: F) -> Result<TreeStats> {
    cfg.validate()?;
    let trees = cfg.zeta_schedule.len() as u64;
    let share = cfg.node_budget / trees;
    let runs: Vec<Result<(Vec<CandidateTuple>, u64, bool)>> = cfg
        .zeta_schedule
        .par_iter()
        .enumerate()
        .map(|(zi, &zeta)| {
            let mut g = Grower {
                data,
                cfg,
                zeta,
                zeta_index: zi as u32,
                rng: stream_rng(cfg.seed, stream::TREE + zi as u64),
                budget: share,
                nodes: 0,
                out: Vec::new(),
            };
            let complete = g.expand(&mut Vec::new(), &mut Vec::new())?;
            Ok((g.out, g.nodes, !complete))
        })
        .collect();

    let mut stats = TreeStats::default();
    let mut seen = HashSet::new();
    for run in runs {
        let (leaves, nodes, truncated) = run?;
        stats.nodes += nodes;
        stats.leaves += leaves.len() as u64;
        stats.truncated.push(truncated);
        for t in leaves {
            let key: Vec<i64> = t.centers.iter().flat_map(|c| quantize(c, TUPLE_DEDUP_STEP)).collect();
            if seen.insert(key) {
                stats.emitted += 1;
                sink(t);
            }
        }
    }
    Ok(stats)
}

/// For each earlier cluster `l < j` (clusters ordered by decreasing size),
/// the number of its points outside every ball of radius `radius` around
/// `centers[..j]`, paired with the bound `4 |C_j| / eps`.
pub fn peeling_mass(
    data: &Dataset,
    labels: &[usize],
    centers: &[Point],
    j: usize,
    radius: f64,
    epsilon: f64,
) -> Vec<(usize, f64)> {
    let mut sizes = vec![0usize; centers.len()];
    for &l in labels {
        sizes[l] += 1;
    }
    let survivors = peel(data, &centers[..j], radius);
    let bound = 4.0 * sizes[j] as f64 / epsilon;
    (0..j)
        .map(|l| (survivors.iter().filter(|&&i| labels[i] == l).count(), bound))
        .collect()
}
