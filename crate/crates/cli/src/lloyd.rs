//! Seeded k-means++ and Lloyd iterations, reported next to the exact
//! result for comparison only.

use anyhow::Result;
use proxi_kmeans::geometry::{check_center_proximity, nearest_center, squared_distance, Clustering, Dataset};
use proxi_kmeans::rng::{stream, stream_rng};
use proxi_kmeans::{Point, ProximityParams};
use rand::Rng;
use serde::{Deserialize, Serialize};

const MAX_ITERS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LloydReport {
    pub labels: Vec<usize>,
    pub cost: f64,
    pub iterations: usize,
    /// Whether the local optimum happens to satisfy the requested proximity.
    pub proximal: bool,
    pub balanced: bool,
}

fn plus_plus(data: &Dataset, k: usize, seed: u64) -> Vec<Point> {
    let mut rng = stream_rng(seed, stream::CHECKS + 1);
    let n = data.len();
    let mut centers = vec![data.point(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = data.points().iter().map(|p| nearest_center(p, &centers).1).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(data.point(next).to_vec());
        for (d, p) in d2.iter_mut().zip(data.points()) {
            *d = d.min(squared_distance(p, &centers[centers.len() - 1]).unwrap_or(f64::INFINITY));
        }
    }
    centers
}

pub fn lloyd_baseline(data: &Dataset, k: usize, params: &ProximityParams, seed: u64) -> Result<LloydReport> {
    let mut centers = plus_plus(data, k, seed);
    let mut labels: Vec<usize> = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERS {
        iterations += 1;
        let next: Vec<usize> = data.points().iter().map(|p| nearest_center(p, &centers).0).collect();
        if next == labels {
            break;
        }
        labels = next;
        let mut sums = vec![vec![0.0; data.dim()]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in data.points().iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for ((c, s), &m) in centers.iter_mut().zip(sums).zip(&counts) {
            if m > 0 {
                *c = s.into_iter().map(|v| v / m as f64).collect();
            }
        }
    }
    let label_opts: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).collect();
    let (cost, proximal, balanced) = match Clustering::from_labels(data, label_opts, k) {
        Ok(c) => {
            let min = params.min_cluster_size(data.len(), k);
            (
                c.cost,
                check_center_proximity(data, &c, params.alpha, params.tolerance).pass,
                c.sizes().iter().all(|&s| s >= min),
            )
        }
        Err(_) => (
            proxi_kmeans::geometry::kmeans_cost(data, &centers, &[])?,
            false,
            false,
        ),
    };
    Ok(LloydReport {
        labels: labels.iter().map(|l| l + 1).collect(),
        cost,
        iterations,
        proximal,
        balanced,
    })
}
