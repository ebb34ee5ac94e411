use nalgebra::DMatrix;
use rayon::prelude::*;

use super::convergence::{geweke_z, iact};
use crate::error::{Error, Result};
use crate::model::emissions_matrix;
use crate::sampler::{Chain, Draw};
use crate::simulation::PointEstimate;

/// Quantile rule behind every credible interval.
pub const QUANTILE_RULE: &str = "type 7: linear interpolation between order statistics";

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryEntry {
    pub name: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    /// Zero lies inside the equal-tail interval.
    pub zero_in_ci: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub level: f64,
    pub entries: Vec<SummaryEntry>,
    /// Posterior means, with δ replaced by its posterior mode.
    pub estimate: PointEstimate,
    pub delta_mean: DMatrix<f64>,
    pub kappa: Vec<Vec<f64>>,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostic {
    pub name: String,
    /// `None` when the draws are constant or too short.
    pub geweke: Option<f64>,
    pub iact: Option<f64>,
    pub ess: Option<f64>,
}

/// Type-7 quantile of an ascending slice.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Draw-by-column series for every stored quantity except the
/// log-likelihoods, followed by η (category probabilities per state).
pub fn chain_series(chain: &Chain) -> (Vec<String>, Vec<Vec<f64>>) {
    let spec = &chain.meta.spec;
    let all = Draw::column_names(spec, chain.meta.respondents);
    let keep = all.iter().take_while(|n| !n.starts_with("loglik[")).count();
    let mut names: Vec<String> = all[..keep].to_vec();
    let rows: usize = spec.categories().iter().sum();
    for c in 0..spec.states() {
        for r in 0..rows {
            names.push(format!("eta[{},{}]", r + 1, c + 1));
        }
    }
    let mut series = vec![Vec::with_capacity(chain.len()); names.len()];
    for d in &chain.draws {
        let row = d.to_row(spec);
        let eta = emissions_matrix(&d.meas, spec);
        for (col, v) in series.iter_mut().zip(row[..keep].iter().chain(eta.iter())) {
            col.push(*v);
        }
    }
    (names, series)
}

fn mean_matrix<F>(chain: &Chain, f: F) -> DMatrix<f64>
where
    F: Fn(&Draw) -> DMatrix<f64>,
{
    let mut it = chain.draws.iter().map(&f);
    let first = it.next().expect("non-empty chain");
    it.fold(first, |a, b| a + b) / chain.len() as f64
}

/// Posterior means, δ modes and equal-tail intervals at `level`.
pub fn summarize_chain(chain: &Chain, level: f64) -> Result<ChainSummary> {
    if chain.is_empty() {
        return Err(Error::invalid("cannot summarize an empty chain"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("interval level {level} outside (0, 1)")));
    }
    let spec = &chain.meta.spec;
    let (names, series) = chain_series(chain);
    let tail = (1.0 - level) / 2.0;
    let entries = names
        .into_par_iter()
        .zip(series.into_par_iter())
        .map(|(name, mut v)| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.sort_by(f64::total_cmp);
            let lower = quantile_type7(&v, tail);
            let upper = quantile_type7(&v, 1.0 - tail);
            SummaryEntry {
                name,
                mean,
                lower,
                upper,
                zero_in_ci: lower <= 0.0 && upper >= 0.0,
            }
        })
        .collect();

    let delta_mean = mean_matrix(chain, |d| d.meas.delta.map(f64::from));
    let k = spec.k();
    let gamma = mean_matrix(chain, |d| {
        d.structural.gamma.map(|g| if g.is_finite() { g } else { 0.0 })
    });
    let mut gamma = gamma;
    for a in 0..k {
        gamma[(a, 0)] = f64::NEG_INFINITY;
        gamma[(a, spec.l())] = f64::INFINITY;
    }
    let kappa = (0..spec.items())
        .map(|j| {
            let m = spec.categories()[j];
            (0..=m)
                .map(|i| {
                    if i == 0 || i == m {
                        chain.draws[0].meas.kappa[j][i]
                    } else {
                        chain.draws.iter().map(|d| d.meas.kappa[j][i]).sum::<f64>() / chain.len() as f64
                    }
                })
                .collect()
        })
        .collect();
    let estimate = PointEstimate {
        beta: mean_matrix(chain, |d| d.meas.beta.clone()),
        delta: delta_mean.map(|v| u8::from(v > 0.5)),
        gamma,
        lambda: mean_matrix(chain, |d| d.structural.lambda.clone()),
        xi: mean_matrix(chain, |d| d.structural.xi.clone()),
        r: mean_matrix(chain, |d| d.structural.r.matrix().clone()),
        eta: mean_matrix(chain, |d| emissions_matrix(&d.meas, spec)),
    };
    let omega = chain.draws.iter().map(|d| d.meas.omega).sum::<f64>() / chain.len() as f64;
    Ok(ChainSummary {
        level,
        entries,
        estimate,
        delta_mean,
        kappa,
        omega,
    })
}

/// Geweke z, IACT and ESS for every summarized quantity, in parallel.
pub fn diagnose_chain(chain: &Chain, frac_a: f64, frac_b: f64) -> Vec<ParamDiagnostic> {
    let (names, series) = chain_series(chain);
    names
        .into_par_iter()
        .zip(series.into_par_iter())
        .map(|(name, v)| {
            let tau = iact(&v).ok();
            ParamDiagnostic {
                name,
                geweke: geweke_z(&v, frac_a, frac_b).ok(),
                iact: tau,
                ess: tau.map(|t| v.len() as f64 / t),
            }
        })
        .collect()
}
