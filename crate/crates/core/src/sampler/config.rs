use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Run length and hyperparameters of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub post_burn_in: usize,
    pub thin: usize,
    /// Slab variance of the item coefficients.
    pub sigma_beta2: f64,
    pub omega0: f64,
    pub omega1: f64,
    /// Rate of the exponential threshold prior.
    pub rate_a: f64,
    /// Inverse-Wishart degrees of freedom; `None` means K + 1.
    pub v0: Option<f64>,
    /// Variance of the threshold random-walk proposal.
    pub sigma_kappa2: f64,
    /// Independent random starts screened before burn-in; the start with
    /// the best pilot log-likelihood is kept. 1 disables screening.
    pub starts: usize,
    /// Length of each pilot run, capped at `burn_in`.
    pub pilot_sweeps: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            burn_in: 6000,
            post_burn_in: 10000,
            thin: 1,
            sigma_beta2: 2.0,
            omega0: 0.5,
            omega1: 0.5,
            rate_a: 1.0 / 1000.0,
            v0: None,
            sigma_kappa2: 0.0025,
            starts: 10,
            pilot_sweeps: 100,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn v0_for(&self, k: usize) -> f64 {
        self.v0.unwrap_or((k + 1) as f64)
    }

    /// Sweeps per pilot start; 0 when there is nothing to screen.
    pub fn pilot_length(&self) -> usize {
        if self.starts > 1 {
            self.pilot_sweeps.min(self.burn_in)
        } else {
            0
        }
    }

    /// Draws kept after thinning.
    pub fn retained(&self) -> usize {
        self.post_burn_in / self.thin
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(Error::Config("starts must be at least 1".into()));
        }
        if self.post_burn_in == 0 {
            return Err(Error::Config("post_burn_in must be positive".into()));
        }
        for (name, v) in [
            ("sigma_beta2", self.sigma_beta2),
            ("omega0", self.omega0),
            ("omega1", self.omega1),
            ("rate_a", self.rate_a),
            ("sigma_kappa2", self.sigma_kappa2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a positive number, got {v}")));
            }
        }
        if !(self.v0_for(k) > k as f64 - 1.0) {
            return Err(Error::Config(format!("v0 must exceed K - 1 = {}", k as f64 - 1.0)));
        }
        Ok(())
    }
}
