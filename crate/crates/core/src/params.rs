use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::DEFAULT_TOLERANCE;

/// Largest perturbation factor for which nearest-center assignment is exact:
/// `(alpha - 1)^2 / (8 alpha)`.
pub fn delta_bound(alpha: f64) -> f64 {
    (alpha - 1.0) * (alpha - 1.0) / (8.0 * alpha)
}

/// Constraint parameters shared by the solver and the oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityParams {
    pub alpha: f64,
    /// Balance: every cluster holds at least `ceil(omega * n / k)` points.
    pub omega: f64,
    /// Number of outliers.
    pub z: usize,
    /// Upper bound on max/min pairwise mean distance.
    pub gamma: Option<f64>,
    /// Failure probability budget for one sampling run.
    pub beta1: f64,
    pub delta: f64,
    pub tolerance: f64,
}

impl ProximityParams {
    pub fn new(alpha: f64) -> Result<Self> {
        let p = Self {
            alpha,
            omega: 1.0,
            z: 0,
            gamma: None,
            beta1: 0.25,
            delta: if alpha > 1.0 { delta_bound(alpha) } else { 0.0 },
            tolerance: DEFAULT_TOLERANCE,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_omega(mut self, omega: f64) -> Result<Self> {
        self.omega = omega;
        self.validate().map(|_| self)
    }

    pub fn with_outliers(mut self, z: usize) -> Self {
        self.z = z;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = Some(gamma);
        self.validate().map(|_| self)
    }

    pub fn with_beta1(mut self, beta1: f64) -> Result<Self> {
        self.beta1 = beta1;
        self.validate().map(|_| self)
    }

    /// Overrides delta; it may only shrink below the default bound.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate().map(|_| self)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        self.tolerance = tolerance;
        self.validate().map(|_| self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(invalid(format!("omega must lie in (0, 1], got {}", self.omega)));
        }
        if let Some(g) = self.gamma {
            if !(g >= 1.0) {
                return Err(invalid(format!("gamma must be at least 1, got {g}")));
            }
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) {
            return Err(invalid(format!("beta1 must lie in (0, 1), got {}", self.beta1)));
        }
        let bound = delta_bound(self.alpha);
        if !(self.delta > 0.0) || self.delta > bound * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "delta must lie in (0, {bound}], got {}",
                self.delta
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(invalid(format!("tolerance must be nonnegative, got {}", self.tolerance)));
        }
        Ok(())
    }

    /// Minimum cluster size for `n` points and `k` clusters.
    pub fn min_cluster_size(&self, n: usize, k: usize) -> usize {
        (self.omega * n as f64 / k as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_delta() {
        let p = ProximityParams::new(2.0).unwrap();
        assert_relative_eq!(p.delta, 1.0 / 16.0);
        assert_relative_eq!(ProximityParams::new(3.0).unwrap().delta, 1.0 / 6.0);
        assert!(p.clone().with_delta(0.01).is_ok());
        assert!(p.with_delta(0.1).is_err());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ProximityParams::new(1.0).is_err());
        assert!(ProximityParams::new(f64::NAN).is_err());
        let p = ProximityParams::new(2.0).unwrap();
        assert!(p.clone().with_omega(0.0).is_err());
        assert!(p.clone().with_omega(1.5).is_err());
        assert!(p.clone().with_gamma(0.5).is_err());
        assert!(p.clone().with_beta1(1.0).is_err());
        assert!(p.with_tolerance(-1.0).is_err());
    }

    #[test]
    fn balance_threshold_rounds_up() {
        let p = ProximityParams::new(2.0).unwrap();
        assert_eq!(p.min_cluster_size(4, 2), 2);
        assert_eq!(p.min_cluster_size(5, 2), 3);
        let half = p.with_omega(0.5).unwrap();
        assert_eq!(half.min_cluster_size(12, 3), 2);
        assert_eq!(half.min_cluster_size(10, 3), 2);
        // 0.3 * 10 / 3 is 1 up to rounding noise
        let p3 = ProximityParams::new(2.0).unwrap().with_omega(0.3).unwrap();
        assert_eq!(p3.min_cluster_size(10, 3), 1);
    }
}
