//! Monotonicity region of the item coefficients.
//!
//! For comparable profiles `u ≥ v` the constraint `(d_u − d_v)·β ≥ 0` must
//! hold. Distinct nonzero difference vectors are enumerated once per spec.

use super::spec::ModelSpec;

/// Slack allowed when checking a constraint, relative to `1 + Σ|β|`.
const CHECK_TOL: f64 = 1e-12;

/// Deduplicated constraint rows `d_u − d_v` over comparable pairs.
#[derive(Debug, Clone)]
pub struct MonotoneConstraints {
    h: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl MonotoneConstraints {
    pub fn new(spec: &ModelSpec) -> Self {
        let s = spec.states();
        let h = spec.h();
        let mut seen = std::collections::BTreeSet::new();
        for u in 0..s {
            let pu = spec.profile(u);
            for v in 0..s {
                if u == v || !pu.dominates(&spec.profile(v)) {
                    continue;
                }
                let diff: Vec<i8> = spec
                    .meas_row(u)
                    .iter()
                    .zip(spec.meas_row(v))
                    .map(|(a, b)| (a - b) as i8)
                    .collect();
                if diff.iter().any(|&x| x != 0) {
                    seen.insert(diff);
                }
            }
        }
        let rows = seen
            .into_iter()
            .map(|d| {
                d.iter()
                    .enumerate()
                    .filter(|(_, &x)| x != 0)
                    .map(|(i, &x)| (i, x as f64))
                    .collect()
            })
            .collect();
        Self { h, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Largest lower bound on `β_h` implied by the other coefficients.
    ///
    /// Only constraints in which column `h` switches on contribute; `−∞`
    /// when there are none, as for the intercept.
    pub fn truncation_point(&self, h: usize, beta: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for row in &self.rows {
            let mut coef = 0.0;
            let mut rest = 0.0;
            for &(i, v) in row {
                if i == h {
                    coef = v;
                } else {
                    rest += v * beta[i];
                }
            }
            if coef == 1.0 {
                best = best.max(-rest);
            }
        }
        best
    }

    pub fn satisfied(&self, beta: &[f64]) -> bool {
        debug_assert_eq!(beta.len(), self.h);
        let tol = CHECK_TOL * (1.0 + beta.iter().map(|b| b.abs()).sum::<f64>());
        self.rows
            .iter()
            .all(|row| row.iter().map(|&(i, v)| v * beta[i]).sum::<f64>() >= -tol)
    }
}

/// Left truncation point of `β_hj` given the other entries of column j.
pub fn monotone_truncation_point(h: usize, beta_j: &[f64], spec: &ModelSpec) -> f64 {
    MonotoneConstraints::new(spec).truncation_point(h, beta_j)
}

/// True when `d_u·β ≥ d_v·β` for every comparable pair `u ≥ v`.
pub fn check_monotone(beta_j: &[f64], spec: &ModelSpec) -> bool {
    beta_j.len() == spec.h() && MonotoneConstraints::new(spec).satisfied(beta_j)
}
