//! Euclidean primitives, center-proximity certificates and the pairwise ball
//! geometry implied by center proximity.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point in `R^d`.
pub type Point = Vec<f64>;

/// Default absolute slack for the strict proximity inequality.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// An immutable, nonempty set of finite points of equal dimension.
///
/// The position of a point in the set is its id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Dataset {
    dim: usize,
    points: Vec<Point>,
}

impl Dataset {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("dataset"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(invalid("points must have at least one coordinate"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if let Some(axis) = p.iter().position(|c| !c.is_finite()) {
                return Err(Error::NonFinite { point: i, axis });
            }
        }
        Ok(Self { dim, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Points selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Vec<&[f64]> {
        indices.iter().map(|&i| self.point(i)).collect()
    }

    /// Largest pairwise distance over the whole set.
    pub fn diameter(&self) -> f64 {
        diameter(&self.points)
    }
}

impl TryFrom<Vec<Point>> for Dataset {
    type Error = Error;

    fn try_from(points: Vec<Point>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<Dataset> for Vec<Point> {
    fn from(d: Dataset) -> Self {
        d.points
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Squared Euclidean distance.
pub fn squared_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(sq_dist(a, b))
}

/// Euclidean distance.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    squared_distance(a, b).map(f64::sqrt)
}

/// Coordinate-wise arithmetic mean.
pub fn mean<P: AsRef<[f64]>>(points: &[P]) -> Result<Point> {
    let first = points.first().ok_or(Error::Empty("mean of no points"))?;
    let dim = first.as_ref().len();
    let mut acc = vec![0.0; dim];
    for p in points {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        for (a, x) in acc.iter_mut().zip(p) {
            *a += x;
        }
    }
    let n = points.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Maximum pairwise distance; zero for fewer than two points.
pub fn diameter<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(sq_dist(a.as_ref(), b.as_ref()));
        }
    }
    best.sqrt()
}

/// Index of the nearest center and the squared distance to it.
/// Ties go to the lowest index.
#[inline]
pub fn nearest_center<P: AsRef<[f64]>>(x: &[f64], centers: &[P]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c.as_ref());
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Sum over non-excluded points of the squared distance to the nearest center.
pub fn kmeans_cost<P: AsRef<[f64]>>(data: &Dataset, centers: &[P], excluded: &[usize]) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::Empty("center list"));
    }
    for c in centers {
        if c.as_ref().len() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: c.as_ref().len(),
            });
        }
    }
    let mut skip = vec![false; data.len()];
    for &i in excluded {
        skip[i] = true;
    }
    Ok(data
        .points()
        .iter()
        .zip(&skip)
        .filter(|(_, &s)| !s)
        .map(|(x, _)| nearest_center(x, centers).1)
        .sum())
}

/// A k-clustering of a dataset, possibly with outliers.
///
/// `labels[i]` is `None` for outliers. Means and cost always describe the
/// clusters as labeled, never the centers that induced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub labels: Vec<Option<usize>>,
    pub means: Vec<Point>,
    pub outliers: Vec<usize>,
    pub cost: f64,
}

impl Clustering {
    /// Builds a clustering from a label vector. Every one of the `k` clusters
    /// must be nonempty.
    pub fn from_labels(data: &Dataset, labels: Vec<Option<usize>>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        if labels.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                got: labels.len(),
            });
        }
        let mut sums = vec![vec![0.0; data.dim()]; k];
        let mut sizes = vec![0usize; k];
        let mut outliers = Vec::new();
        for (i, label) in labels.iter().enumerate() {
            match *label {
                Some(c) if c < k => {
                    sizes[c] += 1;
                    for (s, x) in sums[c].iter_mut().zip(data.point(i)) {
                        *s += x;
                    }
                }
                Some(c) => return Err(invalid(format!("label {c} out of range for k={k}"))),
                None => outliers.push(i),
            }
        }
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Precondition(format!("cluster {c} is empty")));
        }
        let means: Vec<Point> = sums
            .into_iter()
            .zip(&sizes)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();
        let cost = labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|c| sq_dist(data.point(i), &means[c])))
            .sum();
        Ok(Self {
            k,
            labels,
            means,
            outliers,
            cost,
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for c in self.labels.iter().flatten() {
            sizes[*c] += 1;
        }
        sizes
    }

    /// Point indices of cluster `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(c))
            .map(|(i, _)| i)
            .collect()
    }

    /// Labels renamed by order of first appearance, so two clusterings with
    /// the same partition compare equal regardless of cluster naming.
    pub fn canonical_labels(&self) -> Vec<Option<usize>> {
        canonical_labels(&self.labels)
    }

    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.canonical_labels() == other.canonical_labels()
    }
}

pub fn canonical_labels(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut rename: Vec<Option<usize>> = Vec::new();
    let mut next = 0;
    labels
        .iter()
        .map(|l| {
            l.map(|c| {
                if c >= rename.len() {
                    rename.resize(c + 1, None);
                }
                *rename[c].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
        })
        .collect()
}

/// The first reason a clustering fails a proximity check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `point` in cluster `own` is not far enough from the mean of `other`.
    Proximity {
        point: usize,
        own: usize,
        other: usize,
        own_distance: f64,
        other_distance: f64,
    },
    OutlierCount { expected: usize, got: usize },
    /// An inlier is strictly farther from the centers than an outlier.
    OutlierNotFarthest {
        outlier: usize,
        inlier: usize,
        outlier_distance: f64,
        inlier_distance: f64,
    },
    /// An outlier is within `alpha` times some inlier's own-mean distance of a mean.
    OutlierTooClose {
        outlier: usize,
        center: usize,
        outlier_distance: f64,
        point: usize,
        own_distance: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub pass: bool,
    pub violation: Option<Violation>,
}

impl Certificate {
    fn ok() -> Self {
        Self {
            pass: true,
            violation: None,
        }
    }

    fn fail(v: Violation) -> Self {
        Self {
            pass: false,
            violation: Some(v),
        }
    }
}

/// `other > alpha * own`, relaxed by `tol`. A point sitting on its own mean
/// passes only if it is off every other mean.
#[inline]
fn separated(own: f64, other: f64, alpha: f64, tol: f64) -> bool {
    if own == 0.0 {
        other > 0.0
    } else {
        other > alpha * own - tol
    }
}

/// Checks alpha-center proximity of the inliers against the clustering's own means.
pub fn check_center_proximity(data: &Dataset, clustering: &Clustering, alpha: f64, tol: f64) -> Certificate {
    for (x, label) in clustering.labels.iter().enumerate() {
        let Some(own) = *label else { continue };
        let p = data.point(x);
        let d_own = dist(p, &clustering.means[own]);
        for (other, mu) in clustering.means.iter().enumerate() {
            if other == own {
                continue;
            }
            let d_other = dist(p, mu);
            if !separated(d_own, d_other, alpha, tol) {
                return Certificate::fail(Violation::Proximity {
                    point: x,
                    own,
                    other,
                    own_distance: d_own,
                    other_distance: d_other,
                });
            }
        }
    }
    Certificate::ok()
}

/// Checks alpha-center proximity with `z` outliers: the outliers must be a set
/// of `z` farthest points from the means (ties accepted within `tol`), the
/// inliers must be alpha-proximal, and every outlier must be more than alpha
/// times farther from every mean than any inlier is from its own mean.
pub fn check_outlier_proximity(
    data: &Dataset,
    clustering: &Clustering,
    z: usize,
    alpha: f64,
    tol: f64,
) -> Certificate {
    if clustering.outliers.len() != z {
        return Certificate::fail(Violation::OutlierCount {
            expected: z,
            got: clustering.outliers.len(),
        });
    }
    if z == 0 {
        return check_center_proximity(data, clustering, alpha, tol);
    }

    let nearest: Vec<f64> = data
        .points()
        .iter()
        .map(|p| nearest_center(p, &clustering.means).1.sqrt())
        .collect();
    let (closest_outlier, d_out) = clustering
        .outliers
        .iter()
        .map(|&y| (y, nearest[y]))
        .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let farthest_inlier = clustering
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_some())
        .map(|(x, _)| (x, nearest[x]))
        .fold(None, |a: Option<(usize, f64)>, b| match a {
            Some(a) if a.1 >= b.1 => Some(a),
            _ => Some(b),
        });
    if let Some((inlier, d_in)) = farthest_inlier {
        if d_in > d_out + tol {
            return Certificate::fail(Violation::OutlierNotFarthest {
                outlier: closest_outlier,
                inlier,
                outlier_distance: d_out,
                inlier_distance: d_in,
            });
        }
    }

    let inner = check_center_proximity(data, clustering, alpha, tol);
    if !inner.pass {
        return inner;
    }

    // Worst case of the outlier condition: the closest (outlier, mean) pair
    // against the inlier farthest from its own mean.
    let mut worst_out = (usize::MAX, 0, f64::INFINITY);
    for &y in &clustering.outliers {
        for (j, mu) in clustering.means.iter().enumerate() {
            let d = dist(data.point(y), mu);
            if d < worst_out.2 {
                worst_out = (y, j, d);
            }
        }
    }
    let mut worst_in = (usize::MAX, 0.0f64);
    for (x, label) in clustering.labels.iter().enumerate() {
        if let Some(c) = label {
            let d = dist(data.point(x), &clustering.means[*c]);
            if worst_in.0 == usize::MAX || d > worst_in.1 {
                worst_in = (x, d);
            }
        }
    }
    if worst_in.0 != usize::MAX && !separated(worst_in.1, worst_out.2, alpha, tol) {
        return Certificate::fail(Violation::OutlierTooClose {
            outlier: worst_out.0,
            center: worst_out.1,
            outlier_distance: worst_out.2,
            point: worst_in.0,
            own_distance: worst_in.1,
        });
    }
    Certificate::ok()
}

/// The supremum of alpha for which the clustering is center proximal: the
/// minimum over inliers `x` in cluster `i` and `j != i` of
/// `dist(x, mean_j) / dist(x, mean_i)`, and, with outliers, of
/// `dist(y, mean_j) / dist(x, mean_i)` over outliers `y`.
///
/// Infinite when no ratio constrains alpha (e.g. `k = 1` without outliers).
pub fn achieved_alpha(data: &Dataset, clustering: &Clustering) -> f64 {
    let ratio = |own: f64, other: f64| {
        if own == 0.0 {
            if other > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            other / own
        }
    };
    let mut best = f64::INFINITY;
    let mut max_own = 0.0f64;
    for (x, label) in clustering.labels.iter().enumerate() {
        let Some(own) = *label else { continue };
        let p = data.point(x);
        let d_own = dist(p, &clustering.means[own]);
        max_own = max_own.max(d_own);
        for (j, mu) in clustering.means.iter().enumerate() {
            if j != own {
                best = best.min(ratio(d_own, dist(p, mu)));
            }
        }
    }
    for &y in &clustering.outliers {
        for mu in &clustering.means {
            best = best.min(ratio(max_own, dist(data.point(y), mu)));
        }
    }
    best
}

/// Ball geometry for an ordered pair of cluster means under alpha-proximity.
///
/// Cluster `i` lies in the ball of radius `ball_radius_i` around
/// `ball_center_i`; likewise for `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub ball_center_i: Point,
    pub ball_center_j: Point,
    pub ball_radius_i: f64,
    pub ball_radius_j: f64,
    /// Distance between the two ball centers.
    pub center_distance: f64,
    /// Midpoint of both the mean pair and the ball-center pair.
    pub midpoint: Point,
    /// Gap between the two balls.
    pub gap: f64,
    /// Half-angle (radians) of the double cone with apex at `midpoint` that
    /// contains both clusters.
    pub cone_half_angle: f64,
}

pub fn pair_geometry(mu_i: &[f64], mu_j: &[f64], alpha: f64) -> Result<PairGeometry> {
    if !(alpha > 1.0) {
        return Err(invalid(format!("alpha must exceed 1, got {alpha}")));
    }
    let sep = distance(mu_i, mu_j)?;
    if sep == 0.0 {
        return Err(Error::CoincidentMeans);
    }
    let a2 = alpha * alpha;
    let shifted = |a: &[f64], b: &[f64]| -> Point {
        a.iter().zip(b).map(|(x, y)| (a2 * x - y) / (a2 - 1.0)).collect()
    };
    let radius = alpha / (a2 - 1.0) * sep;
    Ok(PairGeometry {
        ball_center_i: shifted(mu_i, mu_j),
        ball_center_j: shifted(mu_j, mu_i),
        ball_radius_i: radius,
        ball_radius_j: radius,
        center_distance: (a2 + 1.0) / (a2 - 1.0) * sep,
        midpoint: mu_i.iter().zip(mu_j).map(|(x, y)| 0.5 * (x + y)).collect(),
        gap: (alpha - 1.0) / (alpha + 1.0) * sep,
        cone_half_angle: (2.0 * alpha / (a2 - 1.0)).atan(),
    })
}

/// Containment results for one ordered pair of clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairContainment {
    pub i: usize,
    pub j: usize,
    pub geometry: PairGeometry,
    /// max over `x` in cluster `i` of `|x - ball_center_i| / ball_radius_i`.
    pub max_radius_ratio: f64,
    pub in_ball: bool,
    pub diameter_bound: bool,
    pub far_from_other_mean: bool,
}

impl PairContainment {
    pub fn pass(&self) -> bool {
        self.in_ball && self.diameter_bound && self.far_from_other_mean
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub pass: bool,
    pub pairs: Vec<PairContainment>,
}

/// Verifies the ball containment, diameter bound and other-mean distance
/// bound for every ordered pair of clusters. Requires the clustering to be
/// alpha-proximal at the same alpha and tolerance.
pub fn verify_containment(data: &Dataset, clustering: &Clustering, alpha: f64, tol: f64) -> Result<ContainmentReport> {
    let cert = check_center_proximity(data, clustering, alpha, tol);
    if !cert.pass {
        return Err(Error::Precondition(format!(
            "clustering is not {alpha}-center proximal: {:?}",
            cert.violation
        )));
    }
    let members: Vec<Vec<usize>> = (0..clustering.k).map(|c| clustering.members(c)).collect();
    let mut pairs = Vec::new();
    for (i, m) in members.iter().enumerate() {
        let pts = data.select(m);
        let diam = diameter(&pts);
        for j in 0..clustering.k {
            if i == j {
                continue;
            }
            let geometry = pair_geometry(&clustering.means[i], &clustering.means[j], alpha)?;
            let sep = dist(&clustering.means[i], &clustering.means[j]);
            let r = geometry.ball_radius_i;
            let mut max_ratio = 0.0f64;
            let mut in_ball = true;
            let mut far = true;
            for p in &pts {
                let d = dist(p, &geometry.ball_center_i);
                max_ratio = max_ratio.max(d / r);
                in_ball &= d < r + tol;
                far &= dist(p, &clustering.means[j]) > alpha / (alpha + 1.0) * sep - tol;
            }
            pairs.push(PairContainment {
                i,
                j,
                max_radius_ratio: max_ratio,
                in_ball,
                diameter_bound: diam <= 2.0 * alpha / (alpha * alpha - 1.0) * sep + tol,
                far_from_other_mean: far,
                geometry,
            });
        }
    }
    Ok(ContainmentReport {
        pass: pairs.iter().all(PairContainment::pass),
        pairs,
    })
}
