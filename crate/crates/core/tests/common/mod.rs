//! Oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Exp, Normal};

use rlcm_core::dist::*;
use rlcm_core::linalg::SymMatrix;
use rlcm_core::model::{Dataset, ModelSpec};
use rlcm_core::sampler::{ChainConfig, Sampler, SlabConditional};
use rlcm_core::simulation::{generate_from, ParamSet};
use rlcm_core::{model::MeasurementParams, model::StructuralParams, RngStream};

/// `Ok(detail)` on success, `Err(detail)` on failure.
pub type Check = Result<String, String>;

pub fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Kolmogorov–Smirnov statistic of a sample against a continuous cdf.
pub fn ks_stat(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.001.
pub fn ks_crit(n: usize) -> f64 {
    (-(0.0005f64).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

const DRAWS: usize = 100_000;

/// Every documented example for the distribution kernels.
pub fn dist_checks() -> Vec<(&'static str, Check)> {
    let mut out: Vec<(&'static str, Check)> = Vec::new();

    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let quad = 0.5 + simpson(pdf, 0.0, 1.5, 2000);
    let got = std_normal_cdf(1.5).unwrap();
    out.push((
        "normal cdf reference points",
        ensure(
            std_normal_cdf(0.0).unwrap() == 0.5
                && std_normal_cdf(f64::NEG_INFINITY).unwrap() == 0.0
                && (got - quad).abs() < 1e-12,
            format!("Phi(1.5) = {got}, quadrature {quad}"),
        ),
    ));
    let grid: Vec<f64> = (0..10_000).map(|i| -10.0 + 20.0 * i as f64 / 9999.0).collect();
    let sym = grid
        .iter()
        .map(|&x| (norm_cdf(x) + norm_cdf(-x) - 1.0).abs())
        .fold(0.0, f64::max);
    let mono = grid.windows(2).all(|w| norm_cdf(w[0]) <= norm_cdf(w[1]));
    out.push((
        "normal cdf symmetry and monotonicity",
        ensure(sym < 1e-12 && mono, format!("max |Phi(x)+Phi(-x)-1| = {sym:.2e}")),
    ));

    let mut r = rng(101);
    let xs: Vec<f64> = (0..DRAWS)
        .map(|_| sample_truncated_normal(0.0, 1.0, f64::NEG_INFINITY, f64::INFINITY, &mut r).unwrap())
        .collect();
    let d = ks_stat(xs, phi);
    out.push((
        "untruncated normal KS",
        ensure(d < ks_crit(DRAWS), format!("D = {d:.5}, critical {:.5}", ks_crit(DRAWS))),
    ));
    let xs: Vec<f64> = (0..DRAWS)
        .map(|_| sample_truncated_normal(0.0, 1.0, 0.0, f64::INFINITY, &mut r).unwrap())
        .collect();
    let (m, sd) = mean_sd(&xs);
    let target = (2.0 / std::f64::consts::PI).sqrt();
    let se = sd / (DRAWS as f64).sqrt();
    out.push((
        "half-normal mean",
        ensure(
            (m - target).abs() < 0.01 && (m - target).abs() < 3.0 * se,
            format!("mean {m:.5} vs {target:.5}"),
        ),
    ));
    out.push((
        "truncated normal inverted bounds",
        ensure(
            sample_truncated_normal(0.0, 1.0, 3.0, 2.0, &mut r).is_err()
                && sample_truncated_normal(0.0, 0.0, 0.0, 1.0, &mut r).is_err(),
            "errors raised".into(),
        ),
    ));

    let xs: Vec<f64> = (0..DRAWS)
        .map(|_| sample_trunc_exponential(1.0, 0.0, f64::INFINITY, &mut r).unwrap())
        .collect();
    let (m, sd) = mean_sd(&xs);
    out.push((
        "truncated exponential mean",
        ensure(
            (m - 1.0).abs() < 0.02 && (m - 1.0).abs() < 3.0 * sd / (DRAWS as f64).sqrt(),
            format!("mean {m:.5}"),
        ),
    ));
    let (a, c) = (0.7, 1.3);
    let xs: Vec<f64> = (0..DRAWS)
        .map(|_| sample_trunc_exponential(a, c, f64::INFINITY, &mut r).unwrap() - c)
        .collect();
    let exp = Exp::new(a).unwrap();
    let d = ks_stat(xs, |x| exp.cdf(x));
    out.push((
        "shifted exponential KS",
        ensure(d < ks_crit(DRAWS), format!("D = {d:.5}")),
    ));
    out.push((
        "truncated exponential empty window",
        ensure(
            sample_trunc_exponential(1.0, 2.0, 2.0, &mut r).is_err()
                && sample_trunc_exponential(0.0, 0.0, 1.0, &mut r).is_err(),
            "errors raised".into(),
        ),
    ));

    let scale = SymMatrix::new(DMatrix::from_element(1, 1, 2.0)).unwrap();
    let xs: Vec<f64> = (0..DRAWS)
        .map(|_| sample_inverse_wishart(&scale, 5.0, &mut r).unwrap()[(0, 0)])
        .collect();
    let (m, sd) = mean_sd(&xs);
    out.push((
        "inverse Wishart K=1 mean",
        ensure(
            (m - 2.0 / 3.0).abs() < 0.02 && (m - 2.0 / 3.0).abs() < 3.0 * sd / (DRAWS as f64).sqrt(),
            format!("mean {m:.5}"),
        ),
    ));
    let id = SymMatrix::identity(2);
    let mut acc = DMatrix::zeros(2, 2);
    for _ in 0..DRAWS {
        acc += sample_inverse_wishart(&id, 10.0, &mut r).unwrap().matrix();
    }
    acc /= DRAWS as f64;
    let dev = (acc - DMatrix::identity(2, 2) / 7.0).amax();
    out.push((
        "inverse Wishart K=2 mean",
        ensure(dev < 0.01, format!("max deviation {dev:.5}")),
    ));
    let bad = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
    out.push((
        "inverse Wishart non-PD scale",
        ensure(sample_inverse_wishart(&bad, 5.0, &mut r).is_err(), "error raised".into()),
    ));

    let zero = DMatrix::zeros(2, 3);
    let (i2, i3) = (SymMatrix::identity(2), SymMatrix::identity(3));
    let mut xs = Vec::with_capacity(6 * DRAWS / 6);
    for _ in 0..DRAWS / 6 {
        xs.extend(sample_matrix_normal(&zero, &i2, &i3, &mut r).unwrap().iter());
    }
    let d = ks_stat(xs.clone(), phi);
    out.push((
        "matrix normal independent entries KS",
        ensure(d < ks_crit(xs.len()), format!("D = {d:.5}")),
    ));
    let mean = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
    let u = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0])).unwrap();
    let v = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 0.5])).unwrap();
    let mut sum = DMatrix::zeros(2, 2);
    let mut second = DMatrix::zeros(4, 4);
    for _ in 0..DRAWS {
        let x = sample_matrix_normal(&mean, &u, &v, &mut r).unwrap();
        sum += &x;
        // vec of the transpose stacks rows
        let e = x - &mean;
        let vt = nalgebra::DVector::from_iterator(4, e.transpose().iter().copied());
        second += &vt * vt.transpose();
    }
    let mdev = (sum / DRAWS as f64 - &mean).amax();
    let cdev = (second / DRAWS as f64 - u.matrix().kronecker(v.matrix())).amax();
    out.push((
        "matrix normal covariance",
        ensure(cdev < 0.05, format!("max deviation {cdev:.4}")),
    ));
    out.push((
        "matrix normal mean",
        ensure(mdev < 0.02, format!("max deviation {mdev:.4}")),
    ));

    let ninf = f64::NEG_INFINITY;
    let p1 = mvn_rect_prob(&[0.0], &SymMatrix::identity(1), &[ninf], &[0.0]).unwrap();
    let p2 = mvn_rect_prob(&[0.0, 0.0], &SymMatrix::identity(2), &[ninf, ninf], &[0.0, 0.0]).unwrap();
    let rho = SymMatrix::equicorrelation(2, 0.5);
    let p3 = mvn_rect_prob(&[0.0, 0.0], &rho, &[ninf, ninf], &[0.0, 0.0]).unwrap();
    out.push((
        "orthant probabilities",
        ensure(
            (p1 - 0.5).abs() < 1e-12 && (p2 - 0.25).abs() < 1e-6 && (p3 - 1.0 / 3.0).abs() < 1e-4,
            format!("{p1:.6} {p2:.6} {p3:.6}"),
        ),
    ));
    out.push(("partition of unity", partition_of_unity(100, 7)));

    let always = (0..1000).all(|_| sample_categorical(&[0.0, 1.0, 0.0], &mut r).unwrap() == 1);
    let ones = (0..DRAWS)
        .filter(|_| sample_categorical(&[1.0, 1.0], &mut r).unwrap() == 1)
        .count() as f64
        / DRAWS as f64;
    out.push((
        "categorical draws",
        ensure(
            always && (ones - 0.5).abs() < 0.01 && sample_categorical(&[-1.0, 2.0], &mut r).is_err(),
            format!("frequency of index 1: {ones:.4}"),
        ),
    ));

    let draw = |s: u64| -> Vec<f64> {
        let mut g = RngStream::new(s, 3);
        (0..20)
            .map(|_| sample_truncated_normal(0.3, 2.0, -1.0, 4.0, &mut g).unwrap())
            .collect()
    };
    out.push((
        "stream reproducibility",
        ensure(draw(9) == draw(9) && draw(9) != draw(10), "same pair, same draws".into()),
    ));
    out
}

/// Random correlation matrix from a normalized Wishart-like product.
pub fn random_corr<R: Rng>(k: usize, rng: &mut R) -> SymMatrix {
    let a = DMatrix::from_fn(k, k + 2, |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = &a * a.transpose();
    let d: Vec<f64> = (0..k).map(|i| s[(i, i)].sqrt()).collect();
    let mut c = DMatrix::from_fn(k, k, |i, j| s[(i, j)] / (d[i] * d[j]));
    for i in 0..k {
        c[(i, i)] = 1.0;
    }
    SymMatrix::new(c).unwrap()
}

/// Rectangle probabilities over a full threshold partition sum to one.
pub fn partition_of_unity(configs: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..configs {
        let k = r.random_range(1..=4);
        let l = r.random_range(2..=3usize);
        let corr = random_corr(k, &mut r);
        let mean: Vec<f64> = (0..k).map(|_| r.random_range(-1.5..1.5)).collect();
        let cuts: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut c = vec![f64::NEG_INFINITY];
                let mut v: f64 = r.random_range(-1.0..0.5);
                for _ in 1..l {
                    c.push(v);
                    v += r.random_range(0.2..1.5);
                }
                c.push(f64::INFINITY);
                c
            })
            .collect();
        let mut total = 0.0;
        for cell in 0..l.pow(k as u32) {
            let mut idx = cell;
            let mut lo = vec![0.0; k];
            let mut hi = vec![0.0; k];
            for a in (0..k).rev() {
                let lev = idx % l;
                idx /= l;
                lo[a] = cuts[a][lev];
                hi[a] = cuts[a][lev + 1];
            }
            total += mvn_rect_prob(&mean, &corr, &lo, &hi).unwrap();
        }
        worst = worst.max((total - 1.0).abs());
    }
    ensure(worst < 1e-3, format!("{configs} configurations, max |sum - 1| = {worst:.2e}"))
}

/// Monotone lower bound by enumerating every ordered profile pair.
pub fn brute_lower(spec: &ModelSpec, beta: &[f64], h: usize) -> f64 {
    if h == 0 {
        return f64::NEG_INFINITY;
    }
    let mut best = f64::NEG_INFINITY;
    for u in 0..spec.states() {
        for v in 0..spec.states() {
            let (pu, pv) = (spec.profile(u), spec.profile(v));
            if !pu.dominates(&pv) {
                continue;
            }
            let (du, dv) = (spec.meas_row(u), spec.meas_row(v));
            if du[h] - dv[h] != 1.0 {
                continue;
            }
            let rest: f64 = (0..beta.len())
                .filter(|&i| i != h)
                .map(|i| (du[i] - dv[i]) * beta[i])
                .sum();
            best = best.max(-rest);
        }
    }
    best
}

/// P(δ = 1) by quadrature of the uncollapsed spike-and-slab posterior.
///
/// `rows` are the design rows of each observation, `ys` the augmented
/// responses.
pub fn delta_quadrature(
    rows: &[Vec<f64>],
    ys: &[f64],
    beta: &[f64],
    h: usize,
    lower: f64,
    omega: f64,
    sb2: f64,
) -> f64 {
    let loglik = |b: f64| -> f64 {
        rows.iter()
            .zip(ys)
            .map(|(d, y)| {
                let eta: f64 = d
                    .iter()
                    .zip(beta)
                    .enumerate()
                    .map(|(i, (x, bi))| x * if i == h { b } else { *bi })
                    .sum();
                -0.5 * (y - eta) * (y - eta)
            })
            .sum()
    };
    let sb = sb2.sqrt();
    let log_prior = |b: f64| -0.5 * b * b / sb2 - (sb * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let trunc = 1.0 - phi(lower / sb);
    let lo = lower.max(-40.0);
    let coarse: Vec<f64> = (0..=80_000).map(|i| lo + (40.0 - lo) * i as f64 / 80_000.0).collect();
    let f = |b: f64| loglik(b) + log_prior(b);
    let peak = coarse.iter().map(|&b| f(b)).fold(f64::NEG_INFINITY, f64::max);
    let spike = loglik(0.0);
    let scale = peak.max(spike);
    let keep: Vec<f64> = coarse.iter().copied().filter(|&b| f(b) > peak - 60.0).collect();
    let (a, b) = (
        (keep[0] - 1e-3).max(lo),
        keep[keep.len() - 1] + 1e-3,
    );
    let slab = simpson(|x| (f(x) - scale).exp(), a, b, 40_000) / trunc;
    let spike = (spike - scale).exp();
    omega * slab / (omega * slab + (1.0 - omega) * spike)
}

/// Collapsed inclusion probability vs quadrature on random instances.
pub fn delta_oracle(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let order = r.random_range(1..=2);
        let spec = ModelSpec::new(2, 2, vec![2], order, 1, 0).unwrap();
        let n = r.random_range(5..40);
        let states: Vec<usize> = (0..n).map(|_| r.random_range(0..spec.states())).collect();
        let rows: Vec<Vec<f64>> = states.iter().map(|&c| spec.meas_row(c).to_vec()).collect();
        let mains: [f64; 2] = [r.random_range(0.0..1.5), r.random_range(0.0..1.5)];
        let inter = r.random_range(-mains[0].min(mains[1])..1.0);
        let mut beta = vec![r.random_range(-1.0..1.0), mains[1], mains[0], inter];
        beta.truncate(spec.h());
        let h = r.random_range(1..spec.h());
        let lower = brute_lower(&spec, &beta, h);
        if lower > 0.0 {
            beta[h] = lower + 0.1;
        }
        let truth: Vec<f64> = rows.iter().map(|d| d.iter().zip(&beta).map(|(a, b)| a * b).sum()).collect();
        let ys: Vec<f64> = truth
            .iter()
            .map(|t| t + r.sample::<f64, _>(StandardNormal) + r.random_range(-0.5..0.5))
            .collect();
        let omega = r.random_range(0.05..0.95);
        let sb2 = r.random_range(0.5..3.0);
        let hh = spec.h();
        let mut dd = DMatrix::zeros(hh, hh);
        let mut dy = vec![0.0; hh];
        for (d, y) in rows.iter().zip(&ys) {
            for a in 0..hh {
                dy[a] += d[a] * y;
                for b in 0..hh {
                    dd[(a, b)] += d[a] * d[b];
                }
            }
        }
        let got = SlabConditional::new(&dd, &dy, &beta, h, sb2, lower).inclusion_probability(omega, sb2);
        let want = if lower > 0.0 {
            1.0
        } else {
            delta_quadrature(&rows, &ys, &beta, h, lower, omega, sb2)
        };
        worst = worst.max((got - want).abs());
    }
    ensure(worst < 1e-6, format!("{instances} instances, max |difference| = {worst:.2e}"))
}

/// Direct WAIC: plain exponentials and a two-pass variance.
pub fn waic_reference(ll: &DMatrix<f64>) -> (f64, f64, f64) {
    let s = ll.nrows() as f64;
    let mut lppd = 0.0;
    let mut pw = 0.0;
    for n in 0..ll.ncols() {
        let col: Vec<f64> = ll.column(n).iter().copied().collect();
        lppd += (col.iter().map(|v| v.exp()).sum::<f64>() / s).ln();
        if ll.nrows() > 1 {
            let m = col.iter().sum::<f64>() / s;
            pw += col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s - 1.0);
        }
    }
    (-2.0 * (lppd - pw), lppd, pw)
}

/// Geyer-free batch-means standard error for a correlated series.
pub fn batch_se(xs: &[f64]) -> f64 {
    let b = 50;
    let size = xs.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|i| xs[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let (_, sd) = mean_sd(&means);
    sd / (b as f64).sqrt()
}

pub struct MomentCheck {
    pub name: String,
    pub prior: f64,
    pub sampler: f64,
    pub z: f64,
}

/// Compares prior-simulated moments with those of the successive
/// conditional simulator that alternates sampler sweeps with data
/// regeneration, on N=8, T=2, J=3, K=1, L=2, M_j=2 and one covariate.
pub fn getting_it_right(cycles: usize, seed: u64) -> Vec<MomentCheck> {
    let (n, t, j) = (8, 2, 3);
    let spec = ModelSpec::new(1, 2, vec![2; j], 1, 1, 1).unwrap();
    let config = ChainConfig {
        burn_in: 0,
        post_burn_in: 1,
        ..ChainConfig::default()
    };
    let x: Vec<f64> = (0..n)
        .flat_map(|i| std::iter::repeat((i as f64 - 3.5) / 2.0).take(t))
        .collect();
    let sb2 = config.sigma_beta2;
    let mut r = RngStream::new(seed, 0);

    let prior_draw = |r: &mut RngStream| -> ParamSet {
        // intercept indicators are always on and enter the ω update,
        // so the implied prior of ω is Beta(ω0 + J, ω1)
        let omega = Beta::new(config.omega0 + j as f64, config.omega1).unwrap().sample(r);
        let mut meas = MeasurementParams::zeros(&spec);
        meas.omega = omega;
        for item in 0..j {
            meas.beta[(0, item)] = sb2.sqrt() * r.sample::<f64, _>(StandardNormal);
            if r.random::<f64>() < omega {
                meas.delta[(1, item)] = 1;
                meas.beta[(1, item)] = (sb2.sqrt() * r.sample::<f64, _>(StandardNormal)).abs();
            }
        }
        let structural = StructuralParams {
            gamma: DMatrix::from_row_slice(1, 3, &[f64::NEG_INFINITY, 0.0, f64::INFINITY]),
            lambda: DMatrix::from_fn(1, 1, |_, _| r.sample(StandardNormal)),
            xi: DMatrix::from_fn(2, 1, |_, _| r.sample(StandardNormal)),
            r: SymMatrix::identity(1),
        };
        ParamSet { meas, structural }
    };
    let record = |meas: &MeasurementParams, alpha: &[u8]| -> Vec<f64> {
        let mut v = vec![meas.omega];
        v.extend((0..j).map(|i| meas.beta[(0, i)]));
        v.extend((0..j).map(|i| meas.beta[(1, i)]));
        v.push(alpha.iter().map(|&a| a as f64).sum::<f64>() / alpha.len() as f64);
        v
    };
    let mut names = vec!["omega".to_string()];
    names.extend((1..=j).map(|i| format!("beta[1,{i}]")));
    names.extend((1..=j).map(|i| format!("beta[2,{i}]")));
    names.push("class 2 frequency".into());

    let mut prior = vec![Vec::with_capacity(cycles); names.len()];
    for _ in 0..cycles {
        let p = prior_draw(&mut r);
        let (_, lat) = generate_from(&p, &spec, n, t, &x, &mut r).unwrap();
        for (slot, v) in prior.iter_mut().zip(record(&p.meas, &lat.alpha)) {
            slot.push(v);
        }
    }

    let p0 = prior_draw(&mut r);
    let (mut data, _) = generate_from(&p0, &spec, n, t, &x, &mut r).unwrap();
    let mut st = Sampler::new(&data, &spec, &config).unwrap().init_state(&mut r).unwrap();
    let mut post = vec![Vec::with_capacity(cycles); names.len()];
    for _ in 0..cycles {
        {
            let sampler = Sampler::new(&data, &spec, &config).unwrap();
            sampler.sweep(&mut st, &mut r).unwrap();
        }
        for (slot, v) in post.iter_mut().zip(record(&st.meas, &st.latents.alpha)) {
            slot.push(v);
        }
        for row in 0..n * t {
            let c = spec.state_of(&st.latents.alpha[row..row + 1]);
            for item in 0..j {
                let eta = st.meas.eta(&spec, c, item);
                let ys = eta + r.sample::<f64, _>(StandardNormal);
                st.y_star[row * j + item] = ys;
                st.y[row * j + item] = u16::from(ys > 0.0);
            }
        }
        data = Dataset::new(n, t, vec![2; j], 1, st.y.clone(), x.clone()).unwrap();
    }

    names
        .into_iter()
        .zip(prior.iter().zip(&post))
        .map(|(name, (a, b))| {
            let (ma, sa) = mean_sd(a);
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            let se = ((sa / (a.len() as f64).sqrt()).powi(2) + batch_se(b).powi(2)).sqrt();
            MomentCheck {
                name,
                prior: ma,
                sampler: mb,
                z: (ma - mb) / se,
            }
        })
        .collect()
}
