//! Exact k-means under alpha-center proximity.
//!
//! The pipeline generates candidate center tuples (by enumerating partitions
//! of a small uniform sample, or by a peeling-and-enclosing tree), assigns
//! every point to its nearest candidate center, and keeps the cheapest
//! induced clustering that passes the balance, proximity, outlier or
//! mean-ratio constraints. A brute-force oracle and generators for planted
//! and hardness instances make the exactness claims checkable.
//!
//! ```
//! use proxi_kmeans::{Dataset, Mode, ProximityParams, SolveOptions, SolveRequest, solve};
//! use proxi_kmeans::candidates::CandidateTuple;
//!
//! let data = Dataset::new(vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]]).unwrap();
//! let params = ProximityParams::new(2.0).unwrap();
//! let req = SolveRequest::new(&data, 2, params, Mode::Balanced).unwrap();
//! let cands = vec![CandidateTuple::external(vec![vec![0.5], vec![10.5]], 0)];
//! let best = solve(&req, cands, &SolveOptions::default()).unwrap().best.unwrap();
//! assert_eq!(best.clustering.cost, 1.0);
//! ```

// Negated comparisons are how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod candidates;
pub mod combinatorics;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod io;
pub mod oracle;
pub mod params;
pub mod peeling;
pub mod rng;
pub mod sampler;
pub mod solver;

pub use candidates::{CandidateTuple, Provenance};
pub use error::{Error, Result};
pub use geometry::{
    achieved_alpha, check_center_proximity, check_outlier_proximity, pair_geometry, verify_containment,
    Certificate, Clustering, Dataset, PairGeometry, Point, Violation, DEFAULT_TOLERANCE,
};
pub use oracle::{count_proximal_clusterings, oracle_solve, OracleBudget, OracleResult};
pub use params::ProximityParams;
pub use peeling::{grow_tree, TreeConfig};
pub use sampler::{SampleConfig, SampleSizeRule};
pub use solver::{assign, assign_with_outliers, feasible, solve, Mode, SolveOptions, SolveRequest, SolveResult};
