//! Uniform sampling and labeled-partition enumeration of the sample.
//!
//! Every labeled partition of a uniform sample into `k` parts (plus an
//! optional, possibly empty, outlier part) yields one candidate: the tuple of
//! part means.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::{CandidateTuple, Provenance};
use crate::combinatorics::labeled_partitions;
use crate::error::{invalid, Error, Result};
use crate::geometry::{diameter, mean, Dataset, Point};
use crate::params::ProximityParams;
use crate::rng::index_below;

/// How the sample size is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSizeRule {
    /// `ceil(16 k^2 / (omega delta^2 beta1) * ln(2k / beta1))`.
    Derived,
    /// `ceil((12 / omega) * 128 k^2 alpha^2 / ((alpha - 1)^4 beta1) * ln(2k / beta1))`.
    PaperLiteral,
    Explicit(usize),
}

pub fn derived_sample_size(k: usize, omega: f64, delta: f64, beta1: f64) -> f64 {
    let k = k as f64;
    (16.0 * k * k / (omega * delta * delta * beta1) * (2.0 * k / beta1).ln()).ceil()
}

pub fn paper_literal_sample_size(k: usize, omega: f64, alpha: f64, beta1: f64) -> f64 {
    let k = k as f64;
    let a4 = (alpha - 1.0).powi(4);
    (12.0 / omega * (128.0 * k * k * alpha * alpha / (a4 * beta1)) * (2.0 * k / beta1).ln()).ceil()
}

/// Sample size that hits each of `k` parts at least `l0` times with
/// probability `1 - beta2`: `ceil((8 / omega) k l0 ln(k / beta2))`.
pub fn coverage_sample_size(k: usize, omega: f64, l0: usize, beta2: f64) -> usize {
    (8.0 / omega * k as f64 * l0 as f64 * (k as f64 / beta2).ln()).ceil() as usize
}

/// Samples per part needed for the sample mean to land within `delta` times
/// the diameter with probability `1 - beta3`: `ceil(1 / (delta^2 beta3))`.
pub fn concentration_sample_size(delta: f64, beta3: f64) -> usize {
    (1.0 / (delta * delta * beta3) - 1e-9).ceil() as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub m: usize,
    pub k: usize,
    pub with_outlier_bucket: bool,
}

impl SampleConfig {
    pub fn resolve(rule: SampleSizeRule, k: usize, params: &ProximityParams, with_outlier_bucket: bool) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        let m = match rule {
            SampleSizeRule::Derived => derived_sample_size(k, params.omega, params.delta, params.beta1),
            SampleSizeRule::PaperLiteral => paper_literal_sample_size(k, params.omega, params.alpha, params.beta1),
            SampleSizeRule::Explicit(m) => m as f64,
        };
        if !(m >= 1.0) || m > usize::MAX as f64 {
            return Err(invalid(format!("sample size {m} is out of range")));
        }
        Ok(Self {
            m: m as usize,
            k,
            with_outlier_bucket,
        })
    }

    pub fn parts(&self) -> usize {
        self.k + usize::from(self.with_outlier_bucket)
    }

    /// Number of candidates the enumeration will emit.
    pub fn stream_len(&self) -> u128 {
        labeled_partitions(self.m as u64, self.parts() as u64, self.with_outlier_bucket)
    }
}

/// `m` i.i.d. uniform indices into `0..n`.
pub fn uniform_sample(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Empty("dataset"));
    }
    if m == 0 {
        return Err(invalid("sample size must be positive"));
    }
    Ok((0..m).map(|_| index_below(rng, n)).collect())
}

/// Streams labeled partitions as label vectors (`labels[i]` is the part of
/// item `i`).
///
/// Order: restricted growth strings in lexicographic order; for each, every
/// assignment of blocks to part labels in lexicographic permutation order.
/// Only the last part may be empty, and only when `allow_empty_last`.
#[derive(Clone, Debug)]
pub struct LabeledPartitions {
    rgs: Vec<usize>,
    p: usize,
    allow_empty_last: bool,
    /// Block-to-label map for the current growth string.
    perm: Vec<usize>,
    done: bool,
}

impl LabeledPartitions {
    pub fn new(m: usize, p: usize, allow_empty_last: bool) -> Result<Self> {
        if p == 0 {
            return Err(invalid("number of parts must be positive"));
        }
        let required = if allow_empty_last { p - 1 } else { p };
        if m < required || m == 0 {
            return Err(invalid(format!(
                "{m} items cannot fill {required} nonempty parts"
            )));
        }
        let mut it = Self {
            rgs: vec![0; m],
            p,
            allow_empty_last,
            perm: Vec::new(),
            done: false,
        };
        if !it.admissible() {
            it.advance_rgs();
        }
        if !it.done {
            it.reset_perm();
        }
        Ok(it)
    }

    fn blocks(&self) -> usize {
        self.rgs.iter().max().map_or(0, |&b| b + 1)
    }

    fn admissible(&self) -> bool {
        let b = self.blocks();
        b == self.p || (self.allow_empty_last && b + 1 == self.p)
    }

    fn reset_perm(&mut self) {
        self.perm = (0..self.blocks()).collect();
    }

    /// Moves to the next admissible growth string with values below `p`.
    fn advance_rgs(&mut self) {
        loop {
            let m = self.rgs.len();
            let mut prefix_max = vec![0usize; m];
            for i in 1..m {
                prefix_max[i] = prefix_max[i - 1].max(self.rgs[i - 1]);
            }
            let pos = (1..m).rev().find(|&i| self.rgs[i] <= prefix_max[i] && self.rgs[i] + 1 < self.p);
            match pos {
                None => {
                    self.done = true;
                    return;
                }
                Some(i) => {
                    self.rgs[i] += 1;
                    self.rgs[i + 1..].iter_mut().for_each(|v| *v = 0);
                }
            }
            if self.admissible() {
                return;
            }
        }
    }

    /// Next injection of blocks into labels. With `b = p` blocks that is a
    /// permutation of all labels; with `b = p - 1` the last label stays empty.
    fn advance_perm(&mut self) -> bool {
        next_permutation(&mut self.perm)
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

impl Iterator for LabeledPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.rgs.iter().map(|&b| self.perm[b]).collect();
        if !self.advance_perm() {
            self.advance_rgs();
            if !self.done {
                self.reset_perm();
            }
        }
        Some(out)
    }
}

/// Candidate stream for one sample: the tuple of means of parts `0..k` for
/// every labeled partition of `sample` (indices into `data`).
pub fn candidate_list<'a>(
    data: &'a Dataset,
    sample: &'a [usize],
    config: &SampleConfig,
    repeat: u32,
) -> Result<impl Iterator<Item = CandidateTuple> + Send + 'a> {
    if sample.len() != config.m {
        return Err(invalid(format!(
            "sample has {} items, config expects {}",
            sample.len(),
            config.m
        )));
    }
    let k = config.k;
    let dim = data.dim();
    let parts = LabeledPartitions::new(sample.len(), config.parts(), config.with_outlier_bucket)?;
    Ok(parts.enumerate().map(move |(index, labels)| {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (&item, &label) in sample.iter().zip(&labels) {
            if label < k {
                sizes[label] += 1;
                for (s, x) in sums[label].iter_mut().zip(data.point(item)) {
                    *s += x;
                }
            }
        }
        let centers = sums
            .into_iter()
            .zip(sizes)
            .map(|(s, n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();
        CandidateTuple::new(
            centers,
            Provenance::Partition {
                repeat,
                index: index as u64,
            },
        )
    }))
}

/// Empirical rate at which the mean of `l` uniform draws from `a` lies within
/// `delta * diam(a)` of the true mean.
pub fn sample_mean_concentration_check(
    a: &[Point],
    l: usize,
    delta: f64,
    beta3: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Empty("point set"));
    }
    if l < concentration_sample_size(delta, beta3) {
        return Err(Error::Precondition(format!(
            "l = {l} is below 1/(delta^2 beta3) = {}",
            concentration_sample_size(delta, beta3)
        )));
    }
    let mu = mean(a)?;
    let bound = delta * diameter(a);
    let dim = mu.len();
    let mut hits = 0usize;
    let mut acc = vec![0.0; dim];
    for _ in 0..trials {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..l {
            let p = &a[index_below(rng, a.len())];
            for (s, x) in acc.iter_mut().zip(p) {
                *s += x;
            }
        }
        let err: f64 = acc
            .iter()
            .zip(&mu)
            .map(|(s, m)| (s / l as f64 - m).powi(2))
            .sum::<f64>()
            .sqrt();
        if err <= bound {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials.max(1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub m: usize,
    pub rate: f64,
}

/// Empirical rate at which `m = ceil((8 / omega) k l0 ln(k / beta2))` uniform
/// draws hit every part at least `l0` times.
pub fn coverage_check(
    sizes: &[usize],
    omega: f64,
    l0: usize,
    beta2: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CoverageReport> {
    let k = sizes.len();
    let n: usize = sizes.iter().sum();
    if k == 0 || n == 0 {
        return Err(Error::Empty("partition"));
    }
    let floor = omega * n as f64 / k as f64;
    if let Some(s) = sizes.iter().find(|&&s| (s as f64) < floor - 1e-9) {
        return Err(Error::Precondition(format!(
            "part of size {s} is below omega n / k = {floor}"
        )));
    }
    let m = coverage_sample_size(k, omega, l0, beta2).max(1);
    let mut owner = Vec::with_capacity(n);
    for (part, &s) in sizes.iter().enumerate() {
        owner.extend(std::iter::repeat_n(part, s));
    }
    let mut hits = 0usize;
    let mut counts = vec![0usize; k];
    for _ in 0..trials {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..m {
            counts[owner[index_below(rng, n)]] += 1;
        }
        if counts.iter().all(|&c| c >= l0) {
            hits += 1;
        }
    }
    Ok(CoverageReport {
        m,
        rate: hits as f64 / trials.max(1) as f64,
    })
}

/// One-sided Wilson score lower bound for a binomial proportion.
pub fn wilson_lower_bound(successes: usize, trials: usize, z: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (centre - spread) / (1.0 + z2 / n)
}
