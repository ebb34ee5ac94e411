use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const MIN_LEN: usize = 100;

fn check_series(x: &[f64]) -> Result<()> {
    if x.len() < MIN_LEN {
        return Err(Error::invalid(format!(
            "series of length {} is shorter than {MIN_LEN}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::DegenerateSeries("constant series"));
    }
    Ok(())
}

/// Biased sample autocovariances γ_0 … γ_{n−1} via zero-padded FFT.
pub fn autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    fwd.process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    buf[..n].iter().map(|c| c.re / (size as f64 * n as f64)).collect()
}

/// Integrated autocorrelation time with Geyer's initial positive sequence
/// truncation, floored at `1 / log10(n)`.
pub fn iact(x: &[f64]) -> Result<f64> {
    check_series(x)?;
    let n = x.len();
    let acov = autocovariance(x);
    let rho: Vec<f64> = acov.iter().map(|g| g / acov[0]).collect();
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = rho[2 * m] + rho[2 * m + 1];
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    Ok(tau.max(1.0 / (n as f64).log10()))
}

/// Effective sample size `n / iact`.
pub fn ess(x: &[f64]) -> Result<f64> {
    Ok(x.len() as f64 / iact(x)?)
}

/// Spectral density at frequency zero, Bartlett window of width ⌊√n⌋.
pub fn spectral_density_zero(x: &[f64]) -> f64 {
    let n = x.len();
    let acov = autocovariance(x);
    let b = (n as f64).sqrt().floor() as usize;
    let mut s = acov[0];
    for k in 1..=b.min(n - 1) {
        s += 2.0 * (1.0 - k as f64 / (b + 1) as f64) * acov[k];
    }
    s.max(0.0)
}

/// Geweke's z comparing the mean of the first `frac_a` of the series with
/// the mean of the last `frac_b`.
pub fn geweke_z(x: &[f64], frac_a: f64, frac_b: f64) -> Result<f64> {
    check_series(x)?;
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(Error::invalid(format!(
            "windows {frac_a} and {frac_b} must be positive and must not overlap"
        )));
    }
    let n = x.len();
    let na = ((frac_a * n as f64).floor() as usize).max(2);
    let nb = ((frac_b * n as f64).floor() as usize).max(2);
    let a = &x[..na];
    let b = &x[n - nb..];
    let mean = |w: &[f64]| w.iter().sum::<f64>() / w.len() as f64;
    let var = spectral_density_zero(a) / na as f64 + spectral_density_zero(b) / nb as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateSeries("both windows are constant"));
    }
    Ok((mean(a) - mean(b)) / var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autocovariance_matches_direct_sum() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 * 0.3 - 1.0).collect();
        let n = x.len();
        let m = x.iter().sum::<f64>() / n as f64;
        let fast = autocovariance(&x);
        for k in [0, 1, 5, 36] {
            let direct: f64 = (0..n - k).map(|i| (x[i] - m) * (x[i + k] - m)).sum::<f64>() / n as f64;
            assert!((fast[k] - direct).abs() < 1e-12, "lag {k}");
        }
    }

    #[test]
    fn constant_series_rejected() {
        let x = vec![2.5; 500];
        assert!(matches!(iact(&x), Err(Error::DegenerateSeries(_))));
        assert!(matches!(geweke_z(&x, 0.1, 0.5), Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn overlapping_windows_rejected() {
        let x: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        assert!(geweke_z(&x, 0.6, 0.5).is_err());
    }
}
