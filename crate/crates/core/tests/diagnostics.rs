mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use rlcm_core::diagnostics::*;
use rlcm_core::model::*;
use rlcm_core::sampler::{run_chain, Chain, ChainConfig};
use rlcm_core::RngStream;

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut r = common::rng(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut r = common::rng(seed);
    let mut x = 0.0;
    let sd = (1.0 - phi * phi).sqrt();
    (0..n)
        .map(|_| {
            x = phi * x + sd * r.sample::<f64, _>(StandardNormal);
            x
        })
        .collect()
}

#[test]
fn waic_examples() {
    let p: f64 = 0.3;
    let w = waic(&DMatrix::from_element(1, 1, p.ln())).unwrap();
    assert!((w.waic + 2.0 * p.ln()).abs() < 1e-12);
    assert_eq!(w.p_waic, 0.0);

    let ll = DMatrix::from_fn(10, 4, |_, n| -1.0 - n as f64);
    let w = waic(&ll).unwrap();
    assert!(w.p_waic.abs() < 1e-12);
    assert!((w.waic + 2.0 * ll.row(0).sum()).abs() < 1e-10);

    assert!(waic(&DMatrix::zeros(0, 3)).is_err());
    let mut bad = DMatrix::zeros(3, 3);
    bad[(1, 1)] = f64::NAN;
    assert!(waic(&bad).is_err());
}

#[test]
fn waic_matches_reference() {
    let mut r = common::rng(21);
    let ll = DMatrix::from_fn(50, 20, |_, _| -5.0 + 2.0 * r.random::<f64>());
    let w = waic(&ll).unwrap();
    let (want, lppd, pw) = common::waic_reference(&ll);
    assert!((w.waic - want).abs() < 1e-8);
    assert!((w.lppd - lppd).abs() < 1e-10);
    assert!((w.p_waic - pw).abs() < 1e-10);
}

#[test]
fn waic_ignores_draw_and_respondent_order() {
    let mut r = common::rng(22);
    let ll = DMatrix::from_fn(30, 12, |_, _| -3.0 * r.random::<f64>());
    let base = waic(&ll).unwrap();
    let mut rows: Vec<usize> = (0..30).collect();
    let mut cols: Vec<usize> = (0..12).collect();
    rows.shuffle(&mut r);
    cols.shuffle(&mut r);
    let shuffled = ll.select_rows(&rows).select_columns(&cols);
    let w = waic(&shuffled).unwrap();
    assert!((w.waic - base.waic).abs() < 1e-9);
}

#[test]
fn geweke_separates_shifted_halves() {
    let mut x = normals(10_000, 23);
    for v in x[5000..].iter_mut() {
        *v += 5.0;
    }
    let z = geweke_z(&x, 0.1, 0.5).unwrap();
    assert!(z.abs() > 10.0, "z = {z}");
    assert!(geweke_z(&vec![1.0; 500], 0.1, 0.5).is_err());
    assert!(geweke_z(&normals(50, 1), 0.1, 0.5).is_err());
    assert!(geweke_z(&normals(500, 1), 0.6, 0.5).is_err());
}

#[test]
fn geweke_null_distribution() {
    let trials = 1000;
    let within = (0..trials)
        .filter(|&i| geweke_z(&normals(10_000, 1000 + i as u64), 0.1, 0.5).unwrap().abs() < 3.0)
        .count();
    assert!(within as f64 >= 0.99 * trials as f64, "{within} of {trials}");
}

#[test]
fn iact_reference_series() {
    let x = normals(100_000, 24);
    let t = iact(&x).unwrap();
    assert!((t - 1.0).abs() < 0.1, "iid IACT {t}");
    assert!((ess(&x).unwrap() - x.len() as f64 / t).abs() < 1e-6);
    let a = ar1(1_000_000, 0.9, 25);
    let t = iact(&a).unwrap();
    assert!((t - 19.0).abs() < 1.5, "AR(1) IACT {t}");
    assert!(iact(&vec![2.0; 1000]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn iact_shift_and_scale_invariant(
        seed in any::<u64>(),
        shift in -1e3..1e3f64,
        scale in 1e-3..1e3f64,
        phi in 0.0..0.8f64,
    ) {
        let x = ar1(2000, phi, seed);
        let y: Vec<f64> = x.iter().map(|v| shift + scale * v).collect();
        let (a, b) = (iact(&x).unwrap(), iact(&y).unwrap());
        prop_assert!((a - b).abs() < 1e-6 * a, "{} vs {}", a, b);
    }
}

fn small_chain(draws: usize) -> Chain {
    let spec = ModelSpec::new(1, 2, vec![2; 3], 1, 1, 1).unwrap();
    let mut r = common::rng(26);
    let y: Vec<u16> = (0..20 * 3).map(|_| r.random_range(0..2)).collect();
    let x: Vec<f64> = (0..20).map(|_| r.random_range(-1.0..1.0)).collect();
    let data = Dataset::new(10, 2, vec![2; 3], 1, y, x).unwrap();
    let config = ChainConfig {
        burn_in: 5,
        post_burn_in: draws,
        ..ChainConfig::default()
    };
    run_chain(&data, &spec, &config, &mut RngStream::new(26, 0)).unwrap()
}

fn entry<'a>(s: &'a ChainSummary, name: &str) -> &'a SummaryEntry {
    s.entries.iter().find(|e| e.name == name).unwrap_or_else(|| panic!("no entry {name}"))
}

#[test]
fn single_draw_summary_is_the_draw() {
    let chain = small_chain(1);
    let s = summarize_chain(&chain, 0.95).unwrap();
    let d = &chain.draws[0];
    assert_eq!(s.estimate.beta, d.meas.beta);
    assert_eq!(s.estimate.lambda, d.structural.lambda);
    assert_eq!(s.estimate.xi, d.structural.xi);
    assert_eq!(s.omega, d.meas.omega);
    let e = entry(&s, "beta[1,1]");
    assert_eq!((e.mean, e.lower, e.upper), (d.meas.beta[(0, 0)], d.meas.beta[(0, 0)], d.meas.beta[(0, 0)]));
}

#[test]
fn delta_mode_uses_strict_majority() {
    let mut chain = small_chain(2);
    chain.draws[0].meas.delta[(1, 0)] = 1;
    chain.draws[0].meas.beta[(1, 0)] = 0.5;
    chain.draws[1].meas.delta[(1, 0)] = 0;
    chain.draws[1].meas.beta[(1, 0)] = 0.0;
    let s = summarize_chain(&chain, 0.95).unwrap();
    assert_eq!(s.delta_mean[(1, 0)], 0.5);
    assert_eq!(s.estimate.delta[(1, 0)], 0);
}

#[test]
fn credible_interval_matches_sorted_draws() {
    let mut chain = small_chain(1);
    let base = chain.draws[0].clone();
    let mut r = common::rng(27);
    let values: Vec<f64> = (0..1000).map(|_| r.sample::<f64, _>(StandardNormal) + 0.4).collect();
    chain.draws = values
        .iter()
        .map(|&v| {
            let mut d = base.clone();
            d.structural.lambda[(0, 0)] = v;
            d
        })
        .collect();
    let s = summarize_chain(&chain, 0.95).unwrap();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    // order statistics with linear interpolation at (n − 1)p
    let q = |p: f64| {
        let h = 999.0 * p;
        let i = h as usize;
        sorted[i] * (1.0 - (h - i as f64)) + sorted[i + 1] * (h - i as f64)
    };
    let e = entry(&s, "lambda[1,1]");
    assert!((e.lower - q(0.025)).abs() < 1e-12);
    assert!((e.upper - q(0.975)).abs() < 1e-12);
    assert!((e.mean - values.iter().sum::<f64>() / 1000.0).abs() < 1e-12);
    assert_eq!(e.zero_in_ci, e.lower <= 0.0 && 0.0 <= e.upper);
}

#[test]
fn diagnostics_cover_every_series() {
    let chain = small_chain(150);
    let (names, series) = chain_series(&chain);
    let diag = diagnose_chain(&chain, 0.1, 0.5);
    assert_eq!(diag.len(), names.len());
    assert!(series.iter().all(|s| s.len() == 150));
    let lambda = diag.iter().find(|d| d.name == "lambda[1,1]").unwrap();
    assert!(lambda.geweke.is_some() && lambda.iact.is_some());
}

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

#[test]
fn loglik_examples() {
    let spec = ModelSpec::new(1, 2, vec![2], 1, 1, 0).unwrap();
    let theta = MeasurementParams::zeros(&spec);
    let v = conditional_loglik(&[1], &[0], &theta, &spec);
    assert!((v - 0.5f64.ln()).abs() < 1e-12);

    // T = 2 waves, J = 2 items, K = 2 attributes
    let spec = ModelSpec::new(2, 2, vec![2, 3], 2, 1, 0).unwrap();
    let mut theta = MeasurementParams::zeros(&spec);
    theta.beta = DMatrix::from_row_slice(4, 2, &[-0.3, 0.2, 0.7, 0.0, 0.4, 0.9, 0.25, 0.3]);
    theta.delta = DMatrix::from_element(4, 2, 1);
    theta.kappa[1] = vec![f64::NEG_INFINITY, 0.0, 0.8, f64::INFINITY];
    let y = [1u16, 2, 0, 1];
    let alpha = [1u8, 0, 1, 1];
    let got = conditional_loglik(&y, &alpha, &theta, &spec);
    let mut product = 1.0;
    let mut per_item = 0.0;
    for t in 0..2 {
        let a = &alpha[t * 2..t * 2 + 2];
        let d = [1.0, a[1] as f64, a[0] as f64, (a[0] * a[1]) as f64];
        for j in 0..2 {
            let eta: f64 = (0..4).map(|h| d[h] * theta.beta[(h, j)]).sum();
            let m = y[t * 2 + j] as usize;
            let k = &theta.kappa[j];
            product *= phi(k[m + 1] - eta) - phi(k[m] - eta);
            let beta_j: Vec<f64> = theta.beta.column(j).iter().copied().collect();
            per_item += emission_prob(m, &AttributeProfile::new(a.to_vec()), &beta_j, k, &spec).unwrap().ln();
        }
    }
    assert!((got - product.ln()).abs() < 1e-10);
    assert!((got - per_item).abs() < 1e-12);

    let data = Dataset::new(1, 2, vec![2, 3], 0, y.to_vec(), vec![]).unwrap();
    let mut lat = Latents::zeros(1, 2, 2);
    lat.alpha.copy_from_slice(&alpha);
    let rows = loglik_rows(&data, &spec, &theta, &lat);
    assert!((rows[0] - got).abs() < 1e-12);
}
