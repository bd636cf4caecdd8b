//! Instance generators: the vertex-cover reduction, the basis-vector instance
//! with exponentially many proximal clusterings, and planted proximal blobs.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::combinatorics::factorial;
use crate::error::{invalid, Error, Result};
use crate::geometry::{achieved_alpha, check_center_proximity, check_outlier_proximity, dist, Clustering, Dataset, Point};
use crate::rng::{index_below, stream, stream_rng};

/// A simple undirected graph on vertices `0..n_vertices`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n_vertices: usize,
    /// Edges with `u < v`, in insertion order.
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut norm = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            norm.push(e);
        }
        Ok(Self { n_vertices, edges: norm })
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_vertices];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    fn adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.n_vertices];
        for &(u, v) in &self.edges {
            adj[u].insert(v);
            adj[v].insert(u);
        }
        adj
    }

    pub fn is_triangle_free(&self) -> bool {
        let adj = self.adjacency();
        self.edges.iter().all(|&(u, v)| adj[u].is_disjoint(&adj[v]))
    }

    pub fn is_vertex_cover(&self, cover: &BTreeSet<usize>) -> bool {
        self.edges.iter().all(|(u, v)| cover.contains(u) || cover.contains(v))
    }

    /// Parses `u v` lines with 1-indexed vertices. Blank lines and `#`
    /// comments are skipped. The vertex count is the largest id seen.
    pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let ids: Vec<usize> = body
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            let [u, v] = ids[..] else {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected two vertex ids".into(),
                });
            };
            if u == 0 || v == 0 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "vertex ids are 1-indexed".into(),
                });
            }
            n = n.max(u).max(v);
            edges.push((u - 1, v - 1));
        }
        Self::new(n, edges)
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_edge_list(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(u, v)| format!("{} {}\n", u + 1, v + 1)).collect()
    }
}

/// Random triangle-free graph with maximum degree `max_degree`, built by
/// proposing `attempts` random vertex pairs and keeping those that break
/// neither constraint.
pub fn random_triangle_free_graph(
    n_vertices: usize,
    max_degree: usize,
    attempts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Graph> {
    if n_vertices < 2 || max_degree == 0 {
        return Err(invalid("need at least two vertices and positive max degree"));
    }
    let mut adj = vec![BTreeSet::new(); n_vertices];
    let mut edges = Vec::new();
    for _ in 0..attempts {
        let u = index_below(rng, n_vertices);
        let v = index_below(rng, n_vertices);
        if u == v
            || adj[u].contains(&v)
            || adj[u].len() >= max_degree
            || adj[v].len() >= max_degree
            || !adj[u].is_disjoint(&adj[v])
        {
            continue;
        }
        adj[u].insert(v);
        adj[v].insert(u);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(Error::RejectionExhausted(attempts));
    }
    Graph::new(n_vertices, edges)
}

/// A vertex cover in which every vertex is the lowest-id cover endpoint of at
/// least one edge: endpoints of a greedy maximal matching, minus vertices
/// whose neighbours are all in the cover.
pub fn known_cover(graph: &Graph) -> BTreeSet<usize> {
    let mut cover = BTreeSet::new();
    for &(u, v) in &graph.edges {
        if !cover.contains(&u) && !cover.contains(&v) {
            cover.insert(u);
            cover.insert(v);
        }
    }
    let adj = graph.adjacency();
    while let Some(v) = cover
        .iter()
        .copied()
        .find(|&v| adj[v].iter().all(|u| cover.contains(u)))
    {
        cover.remove(&v);
    }
    cover
}

fn owner(cover: &BTreeSet<usize>, u: usize, v: usize) -> Option<usize> {
    match (cover.contains(&u), cover.contains(&v)) {
        (true, true) => Some(u.min(v)),
        (true, false) => Some(u),
        (false, true) => Some(v),
        (false, false) => None,
    }
}

/// One point per edge: the sum of the endpoint indicator vectors.
pub fn gen_vertex_cover_instance(graph: &Graph) -> Result<Dataset> {
    if graph.edges.is_empty() {
        return Err(Error::Empty("edge set"));
    }
    Dataset::new(
        graph
            .edges
            .iter()
            .map(|&(u, v)| {
                let mut x = vec![0.0; graph.n_vertices];
                x[u] = 1.0;
                x[v] = 1.0;
                x
            })
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverClustering {
    pub clustering: Clustering,
    /// Cover vertex of each cluster, ascending.
    pub cover: Vec<usize>,
    /// `sum (m_v - 1)` over cover vertices, computed in integers.
    pub integer_cost: usize,
    pub achieved_alpha: f64,
    /// `sqrt((D+1)/(D-1))` for maximum degree `D`; infinite when `D <= 1`.
    pub alpha_bound: f64,
    /// Smallest cluster size relative to `m / k`.
    pub omega: f64,
}

/// Clusters edges by covering vertex, giving shared edges to the lower id.
pub fn cover_to_clustering(graph: &Graph, cover: &BTreeSet<usize>) -> Result<CoverClustering> {
    let data = gen_vertex_cover_instance(graph)?;
    let order: Vec<usize> = cover.iter().copied().collect();
    let mut labels = Vec::with_capacity(graph.edges.len());
    for &(u, v) in &graph.edges {
        let o = owner(cover, u, v).ok_or(Error::NotACover(u + 1, v + 1))?;
        labels.push(Some(order.binary_search(&o).unwrap()));
    }
    let k = order.len();
    let clustering = Clustering::from_labels(&data, labels, k).map_err(|_| {
        Error::Precondition("some cover vertex owns no edge; drop it from the cover".into())
    })?;
    let sizes = clustering.sizes();
    let m = graph.edges.len();
    let delta = graph.max_degree() as f64;
    Ok(CoverClustering {
        integer_cost: sizes.iter().map(|s| s - 1).sum(),
        achieved_alpha: achieved_alpha(&data, &clustering),
        alpha_bound: if delta > 1.0 {
            ((delta + 1.0) / (delta - 1.0)).sqrt()
        } else {
            f64::INFINITY
        },
        omega: *sizes.iter().min().unwrap() as f64 * k as f64 / m as f64,
        cover: order,
        clustering,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialInstance {
    pub data: Dataset,
    pub k: usize,
    pub m: usize,
    /// `sqrt((m+1)/(m-1))`: every balanced clustering is proximal strictly below it.
    pub threshold: f64,
    /// `(km)! / (m!)^k`.
    pub labeled_count: u128,
}

/// The `k m` standard basis vectors of `R^{km}`.
pub fn gen_exponential_instance(k: usize, m: usize) -> Result<ExponentialInstance> {
    if k < 2 || m < 2 {
        return Err(invalid("need k >= 2 and m >= 2"));
    }
    let n = k * m;
    let data = Dataset::new(
        (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect(),
    )?;
    let labeled_count = factorial(n as u64) / factorial(m as u64).saturating_pow(k as u32);
    Ok(ExponentialInstance {
        data,
        k,
        m,
        threshold: ((m as f64 + 1.0) / (m as f64 - 1.0)).sqrt(),
        labeled_count,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub k: usize,
    pub d: usize,
    pub n_per_cluster: usize,
    /// Minimum distance between generating centers.
    pub separation: f64,
    /// Radius of the ball each cluster is drawn from.
    pub spread: f64,
    /// Regenerate until the labeled clustering is proximal at least to this alpha.
    pub alpha_floor: f64,
    /// Fixed generating centers; drawn at random when absent.
    pub centers: Option<Vec<Point>>,
    pub max_attempts: usize,
}

impl PlantedSpec {
    pub fn new(k: usize, d: usize, n_per_cluster: usize, separation: f64, spread: f64, alpha_floor: f64) -> Self {
        Self {
            k,
            d,
            n_per_cluster,
            separation,
            spread,
            alpha_floor,
            centers: None,
            max_attempts: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub data: Dataset,
    pub labels: Vec<Option<usize>>,
    pub means: Vec<Point>,
    pub centers: Vec<Point>,
    pub achieved_alpha: f64,
    pub spec: PlantedSpec,
    pub seed: u64,
}

impl PlantedInstance {
    pub fn clustering(&self) -> Clustering {
        Clustering::from_labels(&self.data, self.labels.clone(), self.means.len()).expect("planted clusters are nonempty")
    }
}

fn ball_point(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Point {
    let d = center.len();
    let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u: f64 = rng.random::<f64>();
    let r = radius * u.powf(1.0 / d as f64);
    center
        .iter()
        .zip(&dir)
        .map(|(c, v)| if norm > 0.0 { c + r * v / norm } else { *c })
        .collect()
}

fn random_centers(rng: &mut ChaCha8Rng, spec: &PlantedSpec) -> Option<Vec<Point>> {
    let side = spec.separation * (spec.k as f64).max(2.0);
    let mut centers: Vec<Point> = Vec::with_capacity(spec.k);
    for _ in 0..10_000 {
        if centers.len() == spec.k {
            break;
        }
        let c: Point = (0..spec.d).map(|_| rng.random::<f64>() * side).collect();
        if centers.iter().all(|o| dist(o, &c) >= spec.separation) {
            centers.push(c);
        }
    }
    (centers.len() == spec.k).then_some(centers)
}

/// Uniform-ball clusters around separated centers, resampled until the
/// labeled clustering is at least `alpha_floor` proximal.
pub fn gen_planted(spec: &PlantedSpec, seed: u64) -> Result<PlantedInstance> {
    if spec.k == 0 || spec.d == 0 || spec.n_per_cluster == 0 {
        return Err(invalid("k, d and n_per_cluster must be positive"));
    }
    if !(spec.separation > 0.0) || !(spec.spread >= 0.0) {
        return Err(invalid("separation must be positive and spread nonnegative"));
    }
    if !(spec.alpha_floor > 1.0) {
        return Err(invalid(format!("alpha floor must exceed 1, got {}", spec.alpha_floor)));
    }
    if let Some(c) = &spec.centers {
        if c.len() != spec.k || c.iter().any(|p| p.len() != spec.d) {
            return Err(invalid("fixed centers must be k points of dimension d"));
        }
    }
    let mut rng = stream_rng(seed, stream::GENERATOR);
    for _ in 0..spec.max_attempts {
        let Some(centers) = spec.centers.clone().or_else(|| random_centers(&mut rng, spec)) else {
            continue;
        };
        let mut points = Vec::with_capacity(spec.k * spec.n_per_cluster);
        let mut labels = Vec::with_capacity(points.capacity());
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..spec.n_per_cluster {
                points.push(ball_point(&mut rng, center, spec.spread));
                labels.push(Some(c));
            }
        }
        let data = Dataset::new(points)?;
        let clustering = Clustering::from_labels(&data, labels.clone(), spec.k)?;
        let alpha = achieved_alpha(&data, &clustering);
        if alpha >= spec.alpha_floor {
            return Ok(PlantedInstance {
                means: clustering.means,
                data,
                labels,
                centers,
                achieved_alpha: alpha,
                spec: spec.clone(),
                seed,
            });
        }
    }
    Err(Error::RejectionExhausted(spec.max_attempts))
}

/// Appends `z` outliers to a planted instance, each at distance
/// `reach * diameter` in a random direction from the overall centroid,
/// resampling until the result is proximal with outliers at the instance's
/// alpha floor.
pub fn add_planted_outliers(inst: &PlantedInstance, z: usize, reach: f64, seed: u64) -> Result<PlantedInstance> {
    if z == 0 {
        return Ok(inst.clone());
    }
    let mut rng = stream_rng(seed, stream::GENERATOR + 1);
    let centroid = crate::geometry::mean(inst.data.points())?;
    let radius = reach * inst.data.diameter().max(f64::MIN_POSITIVE);
    for _ in 0..inst.spec.max_attempts {
        let mut points = inst.data.points().to_vec();
        let mut labels = inst.labels.clone();
        for _ in 0..z {
            let dir: Vec<f64> = (0..inst.data.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            points.push(centroid.iter().zip(&dir).map(|(c, v)| c + radius * v / norm).collect());
            labels.push(None);
        }
        if labels.len() != inst.labels.len() + z {
            continue;
        }
        let data = Dataset::new(points)?;
        let clustering = Clustering::from_labels(&data, labels.clone(), inst.means.len())?;
        let cert = check_outlier_proximity(&data, &clustering, z, inst.spec.alpha_floor, 0.0);
        if cert.pass {
            return Ok(PlantedInstance {
                achieved_alpha: achieved_alpha(&data, &clustering),
                data,
                labels,
                means: clustering.means,
                centers: inst.centers.clone(),
                spec: inst.spec.clone(),
                seed: inst.seed,
            });
        }
    }
    Err(Error::RejectionExhausted(inst.spec.max_attempts))
}

/// Largest alpha in `[1, hi]` at which the clustering passes the plain
/// proximity check, found by bisection to `resolution`. Used only to
/// cross-check [`achieved_alpha`].
pub fn achieved_alpha_bisect(data: &Dataset, clustering: &Clustering, hi: f64, resolution: f64) -> f64 {
    let passes = |a: f64| check_center_proximity(data, clustering, a, 0.0).pass;
    let (mut lo, mut hi) = (1.0, hi);
    if passes(hi) {
        return hi;
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_graph_instance() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let d = gen_vertex_cover_instance(&g).unwrap();
        assert_eq!(d.points(), &[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let cc = cover_to_clustering(&g, &BTreeSet::from([1])).unwrap();
        assert_relative_eq!(cc.clustering.cost, 1.0);
        assert_eq!(cc.integer_cost, 1);

        let single = Graph::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(gen_vertex_cover_instance(&single).unwrap().points(), &[vec![1.0, 1.0]]);
        assert!(gen_vertex_cover_instance(&Graph::new(2, vec![]).unwrap()).is_err());
    }

    #[test]
    fn p4_cover_shares_lowest_id() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let cc = cover_to_clustering(&g, &BTreeSet::from([1, 2])).unwrap();
        assert_eq!(cc.clustering.labels, vec![Some(0), Some(0), Some(1)]);
        assert_relative_eq!(cc.clustering.cost, 1.0);
        assert!(matches!(
            cover_to_clustering(&g, &BTreeSet::from([1])),
            Err(Error::NotACover(3, 4))
        ));
    }

    #[test]
    fn star_cover() {
        let g = Graph::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(g.is_triangle_free());
        assert_eq!(g.max_degree(), 3);
        let d = gen_vertex_cover_instance(&g).unwrap();
        assert!(d.points().iter().all(|p| p[0] == 1.0));
        let cc = cover_to_clustering(&g, &BTreeSet::from([0])).unwrap();
        assert_relative_eq!(cc.clustering.cost, 2.0);
        assert_eq!(cc.achieved_alpha, f64::INFINITY);
        assert_relative_eq!(cc.alpha_bound, 2f64.sqrt());
    }

    #[test]
    fn two_stars_meet_the_degree_bound() {
        // stars at 0 and 4, each of degree 3, joined by no edge
        let g = Graph::new(8, vec![(0, 1), (0, 2), (0, 3), (4, 5), (4, 6), (4, 7)]).unwrap();
        let cc = cover_to_clustering(&g, &BTreeSet::from([0, 4])).unwrap();
        assert_relative_eq!(cc.clustering.cost, 4.0, max_relative = 1e-12);
        assert!(cc.achieved_alpha >= cc.alpha_bound - 1e-9);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::parse_edge_list("1 2\n# comment\n\n2 3\n".as_bytes()).unwrap();
        assert_eq!(g, Graph::new(3, vec![(0, 1), (1, 2)]).unwrap());
        assert_eq!(Graph::parse_edge_list(g.to_edge_list().as_bytes()).unwrap(), g);
        assert!(Graph::parse_edge_list("0 1\n".as_bytes()).is_err());
        assert!(Graph::parse_edge_list("1 1\n".as_bytes()).is_err());
        assert!(Graph::parse_edge_list("1 2 3\n".as_bytes()).is_err());
    }

    #[test]
    fn random_graphs_respect_constraints() {
        let mut rng = stream_rng(4, 0);
        for _ in 0..50 {
            let g = random_triangle_free_graph(12, 4, 60, &mut rng).unwrap();
            assert!(g.is_triangle_free());
            assert!(g.max_degree() <= 4);
            let cover = known_cover(&g);
            assert!(g.is_vertex_cover(&cover));
            let cc = cover_to_clustering(&g, &cover).unwrap();
            assert_eq!(cc.integer_cost, g.edges.len() - cover.len());
        }
    }

    #[test]
    fn exponential_instance() {
        let e = gen_exponential_instance(2, 2).unwrap();
        assert_eq!(e.data.len(), 4);
        assert_eq!(e.data.dim(), 4);
        assert_relative_eq!(e.threshold, 3f64.sqrt());
        assert_eq!(e.labeled_count, 6);
        assert_eq!(gen_exponential_instance(2, 3).unwrap().labeled_count, 20);
        assert_relative_eq!(gen_exponential_instance(2, 3).unwrap().threshold, 2f64.sqrt());
        assert_eq!(gen_exponential_instance(3, 2).unwrap().labeled_count, 90);
        assert!(gen_exponential_instance(1, 2).is_err());
    }

    #[test]
    fn exponential_boundary_is_strict() {
        let e = gen_exponential_instance(2, 2).unwrap();
        let c = Clustering::from_labels(&e.data, vec![Some(0), Some(0), Some(1), Some(1)], 2).unwrap();
        assert!(check_center_proximity(&e.data, &c, 3f64.sqrt() - 1e-6, 0.0).pass);
        // at the threshold the float ratio is within an ulp of sqrt(3)
        let a = achieved_alpha(&e.data, &c);
        assert_relative_eq!(a, 3f64.sqrt(), max_relative = 1e-15);
        assert!(!check_center_proximity(&e.data, &c, a, 0.0).pass);
    }

    #[test]
    fn planted_generation() {
        let spec = PlantedSpec::new(3, 2, 4, 10.0, 0.5, 2.0);
        let p = gen_planted(&spec, 42).unwrap();
        assert_eq!(p.data.len(), 12);
        assert!(p.achieved_alpha >= 2.0);
        let c = p.clustering();
        assert!(check_center_proximity(&p.data, &c, p.achieved_alpha - 1e-9, 0.0).pass);
        assert!(!check_center_proximity(&p.data, &c, p.achieved_alpha + 1e-6, 0.0).pass);
        assert_eq!(gen_planted(&spec, 42).unwrap(), p);
        let b = achieved_alpha_bisect(&p.data, &c, 1e6, 1e-10);
        assert!((b - p.achieved_alpha).abs() < 1e-8 * p.achieved_alpha.max(1.0));
    }

    #[test]
    fn planted_on_a_line() {
        let mut spec = PlantedSpec::new(2, 1, 5, 1.0, 0.05, 1.01);
        spec.centers = Some(vec![vec![0.0], vec![1.0]]);
        let p = gen_planted(&spec, 7).unwrap();
        assert!(p.achieved_alpha >= 4.0, "{}", p.achieved_alpha);

        let zero = PlantedSpec::new(2, 2, 3, 5.0, 0.0, 1e9);
        // points sit on their centers; only rounding in the means keeps this finite
        assert!(gen_planted(&zero, 1).unwrap().achieved_alpha >= 1e9);
        assert!(gen_planted(&PlantedSpec::new(2, 2, 3, 5.0, 0.1, 0.5), 1).is_err());
    }

    #[test]
    fn planted_outliers_satisfy_definition() {
        let p = gen_planted(&PlantedSpec::new(2, 2, 4, 10.0, 0.5, 2.0), 3).unwrap();
        let q = add_planted_outliers(&p, 2, 3.0, 3).unwrap();
        assert_eq!(q.data.len(), 10);
        assert!(check_outlier_proximity(&q.data, &q.clustering(), 2, 2.0, 0.0).pass);
    }
}
