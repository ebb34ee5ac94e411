use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waic {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
}

/// WAIC from an S×N matrix of per-respondent log-likelihoods.
///
/// With a single draw the variance penalty is taken as zero.
pub fn waic(ll: &DMatrix<f64>) -> Result<Waic> {
    let (s, n) = ll.shape();
    if s == 0 || n == 0 {
        return Err(Error::invalid("log-likelihood matrix is empty"));
    }
    if let Some(pos) = ll.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite log-likelihood at draw {}, respondent {}",
            pos % s + 1,
            pos / s + 1
        )));
    }
    if s == 1 {
        log::warn!("WAIC from a single draw: variance penalty set to zero");
    }
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for col in ll.column_iter() {
        let max = col.max();
        let sum: f64 = col.iter().map(|v| (v - max).exp()).sum();
        lppd += max + (sum / s as f64).ln();
        if s > 1 {
            let mean = col.mean();
            p_waic += col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1) as f64;
        }
    }
    Ok(Waic {
        waic: -2.0 * (lppd - p_waic),
        lppd,
        p_waic,
    })
}
