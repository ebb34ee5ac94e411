use nalgebra::DMatrix;

use super::params::{dot, MeasurementParams};
use super::spec::{AttributeProfile, ModelSpec};
use crate::dist::norm_interval;
use crate::error::{Error, Result};

/// P(Y_j = m | α) under the cumulative probit link.
pub fn emission_prob(
    m: usize,
    alpha: &AttributeProfile,
    beta_j: &[f64],
    kappa_j: &[f64],
    spec: &ModelSpec,
) -> Result<f64> {
    spec.check_profile(alpha)?;
    if beta_j.len() != spec.h() {
        return Err(Error::DimensionMismatch {
            context: "beta column",
            expected: spec.h(),
            found: beta_j.len(),
        });
    }
    if kappa_j.len() < 3 || m + 1 >= kappa_j.len() {
        return Err(Error::invalid(format!(
            "category {m} outside thresholds of length {}",
            kappa_j.len()
        )));
    }
    if kappa_j.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("thresholds not strictly increasing"));
    }
    let eta = dot(&spec.meas_basis().encode(alpha.values()), beta_j);
    Ok(category_prob(m, eta, kappa_j))
}

/// Φ(κ_{m+1} − η) − Φ(κ_m − η), with no argument checks.
#[inline]
pub fn category_prob(m: usize, eta: f64, kappa_j: &[f64]) -> f64 {
    norm_interval(kappa_j[m] - eta, kappa_j[m + 1] - eta)
}

/// Emissions matrix: rows stack items then categories, columns are latent
/// states in lexicographic order.
pub fn emissions_matrix(theta: &MeasurementParams, spec: &ModelSpec) -> DMatrix<f64> {
    let rows: usize = spec.categories().iter().sum();
    let mut b = DMatrix::zeros(rows, spec.states());
    for c in 0..spec.states() {
        let mut r = 0;
        for (j, &m) in spec.categories().iter().enumerate() {
            let eta = theta.eta(spec, c, j);
            for cat in 0..m {
                b[(r, c)] = category_prob(cat, eta, &theta.kappa[j]);
                r += 1;
            }
        }
    }
    b
}

/// Emissions restricted to a subset of items.
pub fn emissions_block(b: &DMatrix<f64>, spec: &ModelSpec, items: &[usize]) -> DMatrix<f64> {
    let mut offsets = Vec::with_capacity(spec.items());
    let mut acc = 0;
    for &m in spec.categories() {
        offsets.push(acc);
        acc += m;
    }
    let rows: Vec<usize> = items
        .iter()
        .flat_map(|&j| offsets[j]..offsets[j] + spec.categories()[j])
        .collect();
    b.select_rows(&rows)
}
