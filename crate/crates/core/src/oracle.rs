//! Exhaustive ground truth: every partition into `k` nonempty clusters (and,
//! with outliers, every choice of outlier set) is built directly from labels
//! and filtered with the solver's feasibility predicate.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, factorial, stirling2};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Clustering, Dataset};
use crate::params::ProximityParams;
use crate::solver::{feasible, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_partitions: u128,
    pub max_n: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_partitions: 10_000_000,
            max_n: 14,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best: Option<Clustering>,
    /// Feasible clusterings counted as sets of clusters.
    pub feasible_unlabeled: u64,
    /// Feasible clusterings counted with cluster names (`unlabeled * k!`).
    pub feasible_labeled: u128,
    pub enumerated: u64,
}

/// Number of (outlier set, partition) pairs the oracle would visit.
pub fn enumeration_size(n: usize, k: usize, z: usize) -> u128 {
    if z > n {
        return 0;
    }
    binomial(n as u64, z as u64).saturating_mul(stirling2((n - z) as u64, k as u64))
}

/// Calls `visit` with the block label of each item for every partition of
/// `n` items into exactly `k` nonempty blocks, blocks numbered by first
/// appearance.
fn for_each_partition(n: usize, k: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(pos: usize, used: usize, n: usize, k: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if n - pos < k - used {
            return;
        }
        if pos == n {
            visit(cur);
            return;
        }
        for b in 0..used.min(k) {
            cur.push(b);
            rec(pos + 1, used, n, k, cur, visit);
            cur.pop();
        }
        if used < k {
            cur.push(used);
            rec(pos + 1, used + 1, n, k, cur, visit);
            cur.pop();
        }
    }
    rec(0, 0, n, k, &mut Vec::with_capacity(n), visit);
}

/// Calls `visit` with every `z`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, z: usize, visit: &mut dyn FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..z).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..z).rev().find(|&i| idx[i] < n - z + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..z {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum-cost feasible clustering by exhaustive enumeration.
pub fn oracle_solve(
    data: &Dataset,
    k: usize,
    params: &ProximityParams,
    mode: Mode,
    budget: OracleBudget,
) -> Result<OracleResult> {
    params.validate()?;
    let n = data.len();
    let z = mode.outliers(params);
    if k == 0 || z >= n || k > n - z {
        return Err(invalid(format!("cannot split {n} points with {z} outliers into {k} clusters")));
    }
    if mode == Mode::Gamma && params.gamma.is_none() {
        return Err(invalid("gamma mode needs gamma"));
    }
    if n > budget.max_n {
        return Err(Error::BudgetExceeded(format!("n = {n} exceeds the oracle limit {}", budget.max_n)));
    }
    let size = enumeration_size(n, k, z);
    if size > budget.max_partitions {
        return Err(Error::BudgetExceeded(format!(
            "{size} clusterings exceed the oracle limit {}",
            budget.max_partitions
        )));
    }

    let mut best: Option<Clustering> = None;
    let mut count = 0u64;
    let mut enumerated = 0u64;
    let mut labels = vec![None; n];
    for_each_subset(n, z, &mut |outliers| {
        let mut inliers = Vec::with_capacity(n - z);
        let mut o = outliers.iter().peekable();
        for i in 0..n {
            if o.peek() == Some(&&i) {
                o.next();
            } else {
                inliers.push(i);
            }
        }
        for_each_partition(n - z, k, &mut |blocks| {
            enumerated += 1;
            labels.iter_mut().for_each(|l| *l = None);
            for (&i, &b) in inliers.iter().zip(blocks) {
                labels[i] = Some(b);
            }
            let c = Clustering::from_labels(data, labels.clone(), k).expect("blocks are nonempty");
            if feasible(data, &c, params, mode).is_ok() {
                count += 1;
                if best.as_ref().is_none_or(|b| c.cost < b.cost) {
                    best = Some(c);
                }
            }
        });
    });
    Ok(OracleResult {
        best,
        feasible_unlabeled: count,
        feasible_labeled: (count as u128).saturating_mul(factorial(k as u64)),
        enumerated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProximalCount {
    pub unlabeled: u64,
    pub labeled: u128,
}

/// Number of feasible clusterings, both as sets and with cluster names.
pub fn count_proximal_clusterings(
    data: &Dataset,
    k: usize,
    params: &ProximityParams,
    mode: Mode,
    budget: OracleBudget,
) -> Result<ProximalCount> {
    let r = oracle_solve(data, k, params, mode, budget)?;
    Ok(ProximalCount {
        unlabeled: r.feasible_unlabeled,
        labeled: r.feasible_labeled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize) -> Dataset {
        Dataset::new(
            (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn enumerators_count_correctly() {
        for n in 1..=7 {
            for k in 1..=n.min(4) {
                let mut c = 0u128;
                for_each_partition(n, k, &mut |_| c += 1);
                assert_eq!(c, stirling2(n as u64, k as u64));
            }
            for z in 0..=n {
                let mut c = 0u128;
                for_each_subset(n, z, &mut |_| c += 1);
                assert_eq!(c, binomial(n as u64, z as u64));
            }
        }
    }

    #[test]
    fn four_points_on_a_line() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]]).unwrap();
        let p = ProximityParams::new(2.0).unwrap();
        let r = oracle_solve(&data, 2, &p, Mode::Balanced, OracleBudget::default()).unwrap();
        assert_eq!(r.enumerated, 7);
        let best = r.best.unwrap();
        assert_eq!(best.cost, 1.0);
        assert_eq!(best.labels, vec![Some(0), Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn exponential_counts() {
        let p = ProximityParams::new(1.5).unwrap();
        let r = oracle_solve(&basis(4), 2, &p, Mode::Balanced, OracleBudget::default()).unwrap();
        assert_eq!(r.feasible_unlabeled, 3);
        assert_eq!(r.feasible_labeled, 6);
        assert!((r.best.unwrap().cost - 2.0).abs() < 1e-12);

        let p = ProximityParams::new(0.999 * 2f64.sqrt()).unwrap();
        let c = count_proximal_clusterings(&basis(6), 2, &p, Mode::Balanced, OracleBudget::default()).unwrap();
        assert_eq!((c.unlabeled, c.labeled), (10, 20));
        let p = ProximityParams::new(1.001 * 2f64.sqrt()).unwrap();
        let c = count_proximal_clusterings(&basis(6), 2, &p, Mode::Balanced, OracleBudget::default()).unwrap();
        assert_eq!(c.labeled, 0);
    }

    #[test]
    fn no_feasible_at_huge_alpha() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let p = ProximityParams::new(1e6).unwrap();
        let r = oracle_solve(&data, 2, &p, Mode::Balanced, OracleBudget::default()).unwrap();
        assert!(r.best.is_none());
        assert_eq!(r.feasible_unlabeled, 0);
    }

    #[test]
    fn outliers_must_be_farthest() {
        let data = Dataset::new(vec![vec![0.0], vec![0.1], vec![3.0], vec![3.1], vec![100.0]]).unwrap();
        let p = ProximityParams::new(2.0).unwrap().with_omega(0.5).unwrap().with_outliers(1);
        let r = oracle_solve(&data, 2, &p, Mode::Outliers, OracleBudget::default()).unwrap();
        assert_eq!(r.best.unwrap().outliers, vec![4]);
        assert_eq!(r.enumerated, 5 * 7);
    }

    #[test]
    fn budget_is_enforced_up_front() {
        let data = basis(15);
        let p = ProximityParams::new(1.5).unwrap();
        assert!(matches!(
            oracle_solve(&data, 2, &p, Mode::Balanced, OracleBudget::default()),
            Err(Error::BudgetExceeded(_))
        ));
        let small = OracleBudget {
            max_partitions: 6,
            max_n: 14,
        };
        assert!(oracle_solve(&basis(4), 2, &p, Mode::Balanced, small).is_err());
    }
}
