use nalgebra::DMatrix;

use super::params::StructuralParams;
use super::spec::{AttributeProfile, ModelSpec};
use crate::dist::{mvn_rect_prob_with, MvnRule};
use crate::error::{Error, Result};

/// Mean of the latent normal: `x·λ` plus `d_otr(α_prev)·ξ` after the first wave.
pub fn structural_mean(
    alpha_prev: Option<&AttributeProfile>,
    x_t: &[f64],
    theta: &StructuralParams,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    if x_t.len() != spec.covariates() {
        return Err(Error::DimensionMismatch {
            context: "covariate row",
            expected: spec.covariates(),
            found: x_t.len(),
        });
    }
    let k = spec.k();
    let mut mean = vec![0.0; k];
    for (a, m) in mean.iter_mut().enumerate() {
        *m = x_t
            .iter()
            .enumerate()
            .map(|(d, &x)| x * theta.lambda[(d, a)])
            .sum();
    }
    if let Some(prev) = alpha_prev {
        spec.check_profile(prev)?;
        let row = spec.trans_row(spec.state_of(prev.values()));
        for (a, m) in mean.iter_mut().enumerate() {
            *m += row
                .iter()
                .enumerate()
                .map(|(h, &v)| v * theta.xi[(h, a)])
                .sum::<f64>();
        }
    }
    Ok(mean)
}

/// P(α^t = alpha_t | α^{t−1} = alpha_prev, x_t); `None` for the first wave.
pub fn transition_prob(
    alpha_t: &AttributeProfile,
    alpha_prev: Option<&AttributeProfile>,
    x_t: &[f64],
    theta: &StructuralParams,
    spec: &ModelSpec,
) -> Result<f64> {
    spec.check_profile(alpha_t)?;
    let mean = structural_mean(alpha_prev, x_t, theta, spec)?;
    box_prob(alpha_t, &mean, theta, &MvnRule::default())
}

/// Probabilities of every target state, in lexicographic order.
pub fn transition_row(
    alpha_prev: Option<&AttributeProfile>,
    x_t: &[f64],
    theta: &StructuralParams,
    spec: &ModelSpec,
    rule: &MvnRule,
) -> Result<Vec<f64>> {
    let mean = structural_mean(alpha_prev, x_t, theta, spec)?;
    (0..spec.states())
        .map(|c| box_prob(&spec.profile(c), &mean, theta, rule))
        .collect()
}

/// Transition matrix U with rows indexed by the previous state.
pub fn transition_matrix(
    x_t: &[f64],
    theta: &StructuralParams,
    spec: &ModelSpec,
    rule: &MvnRule,
) -> Result<DMatrix<f64>> {
    let s = spec.states();
    let mut u = DMatrix::zeros(s, s);
    for prev in 0..s {
        let row = transition_row(Some(&spec.profile(prev)), x_t, theta, spec, rule)?;
        for (c, p) in row.into_iter().enumerate() {
            u[(prev, c)] = p;
        }
    }
    Ok(u)
}

fn box_prob(
    alpha: &AttributeProfile,
    mean: &[f64],
    theta: &StructuralParams,
    rule: &MvnRule,
) -> Result<f64> {
    let (lower, upper): (Vec<f64>, Vec<f64>) = alpha
        .values()
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            (
                theta.gamma[(k, a as usize)],
                theta.gamma[(k, a as usize + 1)],
            )
        })
        .unzip();
    mvn_rect_prob_with(mean, &theta.r, &lower, &upper, rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::norm_cdf;
    use crate::linalg::SymMatrix;

    fn flat(spec: &ModelSpec) -> StructuralParams {
        let k = spec.k();
        let mut gamma = DMatrix::zeros(k, spec.l() + 1);
        for a in 0..k {
            gamma[(a, 0)] = f64::NEG_INFINITY;
            gamma[(a, spec.l())] = f64::INFINITY;
            for l in 2..spec.l() {
                gamma[(a, l)] = (l - 1) as f64;
            }
        }
        StructuralParams {
            gamma,
            lambda: DMatrix::zeros(spec.covariates(), k),
            xi: DMatrix::zeros(spec.h_otr(), k),
            r: SymMatrix::identity(k),
        }
    }

    #[test]
    fn symmetric_independent_states() {
        let spec = ModelSpec::new(3, 2, vec![2], 1, 1, 1).unwrap();
        let theta = flat(&spec);
        for c in 0..spec.states() {
            let p = transition_prob(&spec.profile(c), None, &[0.7], &theta, &spec).unwrap();
            assert!((p - 0.125).abs() < 1e-6);
        }
    }

    #[test]
    fn univariate_mean_shift() {
        let spec = ModelSpec::new(1, 2, vec![2], 1, 1, 1).unwrap();
        let mut theta = flat(&spec);
        theta.lambda[(0, 0)] = 0.8;
        theta.xi[(1, 0)] = -0.3;
        let prev = AttributeProfile::new(vec![1]);
        let p = transition_prob(&AttributeProfile::new(vec![1]), Some(&prev), &[1.0], &theta, &spec)
            .unwrap();
        assert!((p - (1.0 - norm_cdf(-0.5))).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let spec = ModelSpec::new(1, 2, vec![2], 1, 1, 2).unwrap();
        let theta = flat(&spec);
        assert!(transition_prob(&spec.profile(0), None, &[1.0], &theta, &spec).is_err());
    }
}
