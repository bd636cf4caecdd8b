//! Python bindings.
//!
//! Points are lists of float lists. Labels are 0-based ints with `None` for
//! outliers. Results come back as plain dicts.

#[pyo3::pymodule]
mod proxi_kmeans_py {
    use proxi_kmeans::geometry::{self, Clustering, Dataset, DEFAULT_TOLERANCE};
    use proxi_kmeans::instances::{self, PlantedSpec};
    use proxi_kmeans::oracle::{oracle_solve, OracleBudget};
    use proxi_kmeans::rng::{stream, stream_rng};
    use proxi_kmeans::sampler::{candidate_list, uniform_sample, SampleConfig, SampleSizeRule};
    use proxi_kmeans::solver::{solve as run_solve, Mode, SolveOptions, SolveRequest};
    use proxi_kmeans::ProximityParams;
    use pyo3::exceptions::PyValueError;
    use pyo3::prelude::*;
    use serde::Serialize;
    use serde_json::json;

    fn err(e: impl std::fmt::Display) -> PyErr {
        PyValueError::new_err(e.to_string())
    }

    fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
        let text = serde_json::to_string(value).map_err(err)?;
        py.import("json")?.call_method1("loads", (text,))
    }

    fn dataset(points: Vec<Vec<f64>>) -> PyResult<Dataset> {
        Dataset::new(points).map_err(err)
    }

    fn parse_mode(mode: &str, z: usize, beta: Option<usize>) -> PyResult<Mode> {
        let m = match mode {
            "balanced" => Mode::Balanced,
            "gamma" => Mode::Gamma,
            "outliers" => Mode::Outliers,
            "list" => Mode::List { beta: beta.unwrap_or(z) },
            other => return Err(err(format!("unknown mode {other:?}"))),
        };
        if z > 0 && !matches!(m, Mode::Outliers | Mode::List { .. }) {
            return Err(err("z needs mode 'outliers' or 'list'"));
        }
        Ok(m)
    }

    fn params(alpha: f64, omega: f64, z: usize, gamma: Option<f64>, tolerance: f64) -> PyResult<ProximityParams> {
        let mut p = ProximityParams::new(alpha)
            .and_then(|p| p.with_omega(omega))
            .and_then(|p| p.with_tolerance(tolerance))
            .map_err(err)?
            .with_outliers(z);
        if let Some(g) = gamma {
            p = p.with_gamma(g).map_err(err)?;
        }
        Ok(p)
    }

    fn certificate(data: &Dataset, c: &Clustering, alpha: f64, tol: f64, z: usize) -> geometry::Certificate {
        if z == 0 && c.outliers.is_empty() {
            geometry::check_center_proximity(data, c, alpha, tol)
        } else {
            geometry::check_outlier_proximity(data, c, z, alpha, tol)
        }
    }

    fn describe(data: &Dataset, c: &Clustering, alpha: f64, tol: f64, z: usize) -> serde_json::Value {
        json!({
            "labels": c.labels,
            "means": c.means,
            "outliers": c.outliers,
            "sizes": c.sizes(),
            "cost": c.cost,
            "achieved_alpha": geometry::achieved_alpha(data, c),
            "certificate": certificate(data, c, alpha, tol, z),
        })
    }

    /// Best feasible clustering over `repeats` sampled candidate lists, or
    /// `None` in the result's `best` field when no candidate is feasible.
    #[pyfunction]
    #[pyo3(signature = (points, k, alpha, *, omega=1.0, z=0, mode="balanced", gamma=None, beta=None,
                        sample_size=6, repeats=1, seed=0, tolerance=DEFAULT_TOLERANCE, threads=None))]
    #[allow(clippy::too_many_arguments)]
    fn solve<'py>(
        py: Python<'py>,
        points: Vec<Vec<f64>>,
        k: usize,
        alpha: f64,
        omega: f64,
        z: usize,
        mode: &str,
        gamma: Option<f64>,
        beta: Option<usize>,
        sample_size: usize,
        repeats: usize,
        seed: u64,
        tolerance: f64,
        threads: Option<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let data = dataset(points)?;
        let p = params(alpha, omega, z, gamma, tolerance)?;
        let mode = parse_mode(mode, z, beta)?;
        if repeats == 0 {
            return Err(err("repeats must be positive"));
        }
        let value = py.detach(|| -> proxi_kmeans::Result<serde_json::Value> {
            let req = SolveRequest::new(&data, k, p.clone(), mode)?;
            let outliers = mode.outliers(&p);
            let config = SampleConfig::resolve(SampleSizeRule::Explicit(sample_size), k, &p, outliers > 0)?;
            let samples = (0..repeats)
                .map(|r| uniform_sample(&mut stream_rng(seed, stream::SAMPLER + r as u64), data.len(), config.m))
                .collect::<proxi_kmeans::Result<Vec<_>>>()?;
            let streams = samples
                .iter()
                .enumerate()
                .map(|(r, s)| candidate_list(&data, s, &config, r as u32))
                .collect::<proxi_kmeans::Result<Vec<_>>>()?;
            let opts = SolveOptions {
                threads,
                ..SolveOptions::default()
            };
            let result = run_solve(&req, streams.into_iter().flatten(), &opts)?;
            let best = result.best.map(|b| {
                let mut v = describe(&data, &b.clustering, p.alpha, p.tolerance, outliers);
                v["candidate_cost"] = json!(b.candidate_cost);
                v["candidate_index"] = json!(b.index);
                v
            });
            Ok(json!({
                "best": best,
                "candidates_scanned": result.candidates_scanned,
                "feasible_count": result.feasible_count,
                "list": result.list.iter().map(|c| &c.labels).collect::<Vec<_>>(),
            }))
        });
        to_py(py, &value.map_err(err)?)
    }

    /// Exact optimum by enumerating every partition (small inputs only).
    #[pyfunction]
    #[pyo3(signature = (points, k, alpha, *, omega=1.0, z=0, mode="balanced", gamma=None, beta=None,
                        tolerance=DEFAULT_TOLERANCE, max_n=14, max_partitions=10_000_000))]
    #[allow(clippy::too_many_arguments)]
    fn oracle<'py>(
        py: Python<'py>,
        points: Vec<Vec<f64>>,
        k: usize,
        alpha: f64,
        omega: f64,
        z: usize,
        mode: &str,
        gamma: Option<f64>,
        beta: Option<usize>,
        tolerance: f64,
        max_n: usize,
        max_partitions: u128,
    ) -> PyResult<Bound<'py, PyAny>> {
        let data = dataset(points)?;
        let p = params(alpha, omega, z, gamma, tolerance)?;
        let mode = parse_mode(mode, z, beta)?;
        let budget = OracleBudget { max_partitions, max_n };
        let r = py.detach(|| oracle_solve(&data, k, &p, mode, budget)).map_err(err)?;
        let best = r
            .best
            .as_ref()
            .map(|c| describe(&data, c, p.alpha, p.tolerance, mode.outliers(&p)));
        to_py(
            py,
            &json!({
                "best": best,
                "feasible_unlabeled": r.feasible_unlabeled,
                "feasible_labeled": r.feasible_labeled,
                "enumerated": r.enumerated,
            }),
        )
    }

    /// Proximity certificate for a labeling; `z` defaults to the number of `None` labels.
    #[pyfunction]
    #[pyo3(signature = (points, labels, alpha, *, k=None, z=None, tolerance=DEFAULT_TOLERANCE))]
    fn verify<'py>(
        py: Python<'py>,
        points: Vec<Vec<f64>>,
        labels: Vec<Option<usize>>,
        alpha: f64,
        k: Option<usize>,
        z: Option<usize>,
        tolerance: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let data = dataset(points)?;
        let p = params(alpha, 1.0, 0, None, tolerance)?;
        let k = k.unwrap_or_else(|| labels.iter().flatten().max().map_or(0, |l| l + 1));
        let c = Clustering::from_labels(&data, labels, k).map_err(err)?;
        let z = z.unwrap_or(c.outliers.len());
        to_py(py, &describe(&data, &c, p.alpha, p.tolerance, z))
    }

    /// Largest alpha at which the labeling is center proximal.
    #[pyfunction]
    fn achieved_alpha(points: Vec<Vec<f64>>, labels: Vec<Option<usize>>) -> PyResult<f64> {
        let data = dataset(points)?;
        let k = labels.iter().flatten().max().map_or(0, |l| l + 1);
        let c = Clustering::from_labels(&data, labels, k).map_err(err)?;
        Ok(geometry::achieved_alpha(&data, &c))
    }

    /// Ball, gap and cone description of two cluster means.
    #[pyfunction]
    fn pair_geometry<'py>(py: Python<'py>, mu_i: Vec<f64>, mu_j: Vec<f64>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &geometry::pair_geometry(&mu_i, &mu_j, alpha).map_err(err)?)
    }

    /// Clusters drawn from balls around separated centers.
    #[pyfunction]
    #[pyo3(signature = (k, *, d=2, n_per_cluster=5, separation=10.0, spread=1.0, alpha_floor=2.0,
                        z=0, reach=3.0, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn gen_planted<'py>(
        py: Python<'py>,
        k: usize,
        d: usize,
        n_per_cluster: usize,
        separation: f64,
        spread: f64,
        alpha_floor: f64,
        z: usize,
        reach: f64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let spec = PlantedSpec::new(k, d, n_per_cluster, separation, spread, alpha_floor);
        let mut inst = instances::gen_planted(&spec, seed).map_err(err)?;
        if z > 0 {
            inst = instances::add_planted_outliers(&inst, z, reach, seed).map_err(err)?;
        }
        to_py(py, &inst)
    }

    /// The `k*m` basis vectors with their proximity threshold and balanced count.
    #[pyfunction]
    fn gen_exponential<'py>(py: Python<'py>, k: usize, m: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &instances::gen_exponential_instance(k, m).map_err(err)?)
    }
}
