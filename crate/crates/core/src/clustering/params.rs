use serde::{Deserialize, Serialize};

use super::ClusterError;

/// Exponent applied to the squared-distance ratios in the membership update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipExponent {
    /// `(D²_ik / D²_jk)^(1/(m-1))`, the usual fuzzy c-means update.
    #[default]
    Standard,
    /// `(D²_ik / D²_jk)^(2/(m-1))`, kept for compatibility with the printed
    /// form of the GK-B update.
    Literal,
}

impl MembershipExponent {
    pub fn power(self, m: f64) -> f64 {
        match self {
            MembershipExponent::Standard => 1.0 / (m - 1.0),
            MembershipExponent::Literal => 2.0 / (m - 1.0),
        }
    }
}

/// Parameters of the Gustafson-Kessel clustering with Babuška's covariance
/// conditioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkbParams {
    /// Number of clusters.
    pub c: usize,
    /// Fuzziness exponent, strictly greater than one.
    pub m: f64,
    /// Termination tolerance on the max-abs change of the partition.
    pub epsilon: f64,
    /// Weight of the scaled identity blended into each covariance.
    pub gamma: f64,
    /// Condition-number threshold for the covariance eigenvalues.
    pub beta: f64,
    /// Cluster volumes, one per cluster.
    pub rho: Vec<f64>,
    pub max_iters: usize,
    pub seed: u64,
    #[serde(default)]
    pub exponent: MembershipExponent,
}

pub const DEFAULT_MAX_ITERS: usize = 300;

impl GkbParams {
    /// The operating point used for orthophoto segmentation:
    /// `m = 2`, `ε = 1e-3`, `γ = 0`, `β = 1e15`, `ρ_i = 1`.
    pub fn new(c: usize) -> Self {
        GkbParams {
            c,
            m: 2.0,
            epsilon: 1e-3,
            gamma: 0.0,
            beta: 1e15,
            rho: vec![1.0; c],
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
            exponent: MembershipExponent::Standard,
        }
    }

    /// Changes the cluster count. Existing volumes are kept, new clusters get
    /// volume 1.
    pub fn with_clusters(mut self, c: usize) -> Self {
        self.c = c;
        self.rho.resize(c, 1.0);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_exponent(mut self, exponent: MembershipExponent) -> Self {
        self.exponent = exponent;
        self
    }

    /// Checks every parameter invariant except the `c < N` bound, which needs
    /// the data.
    pub fn validate(&self) -> Result<(), ClusterError> {
        let invalid = |msg: String| Err(ClusterError::InvalidParams(msg));
        if self.c < 1 {
            return invalid("cluster count must be at least 1".into());
        }
        if !(self.m > 1.0) || !self.m.is_finite() {
            return invalid(format!(
                "fuzziness m must be a finite value > 1, got {}",
                self.m
            ));
        }
        if !(self.epsilon > 0.0) {
            return invalid(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return invalid(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.beta >= 1.0) {
            return invalid(format!("beta must be >= 1, got {}", self.beta));
        }
        if self.rho.len() != self.c {
            return invalid(format!(
                "expected {} cluster volumes, got {}",
                self.c,
                self.rho.len()
            ));
        }
        if let Some(r) = self.rho.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return invalid(format!("cluster volumes must be finite and > 0, got {r}"));
        }
        if self.max_iters < 1 {
            return invalid("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

impl Default for GkbParams {
    fn default() -> Self {
        GkbParams::new(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operating_point_is_valid() {
        let p = GkbParams::new(2);
        assert_eq!(p.rho, vec![1.0, 1.0]);
        assert_eq!(p.beta, 1e15);
        assert_eq!(p.gamma, 0.0);
        assert_eq!(p.m, 2.0);
        assert_eq!(p.epsilon, 1e-3);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(GkbParams::new(0).validate().is_err());
        assert!(GkbParams::new(2).with_m(1.0).validate().is_err());
        assert!(GkbParams::new(2).with_epsilon(0.0).validate().is_err());
        assert!(GkbParams::new(2).with_gamma(1.5).validate().is_err());
        assert!(GkbParams::new(2).with_beta(0.5).validate().is_err());
        assert!(GkbParams::new(2).with_max_iters(0).validate().is_err());
        let mut p = GkbParams::new(2);
        p.rho[1] = 0.0;
        assert!(p.validate().is_err());
        p.rho.pop();
        assert!(p.validate().is_err());
    }

    #[test]
    fn with_clusters_extends_volumes() {
        let mut p = GkbParams::new(2);
        p.rho[0] = 3.0;
        let p = p.with_clusters(3);
        assert_eq!(p.rho, vec![3.0, 1.0, 1.0]);
    }
}
