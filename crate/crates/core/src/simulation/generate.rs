use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::scenario::{ItemSet, ScenarioSpec, CATEGORIES, COVARIATES};
use crate::error::Result;
use crate::linalg::SymMatrix;
use crate::model::{
    category_prob, default_thresholds, structural_mean, AttributeProfile, Dataset, Latents,
    MeasurementParams, ModelSpec, StructuralParams,
};
use crate::rng::RngStream;

/// A complete parameter set on the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub meas: MeasurementParams,
    pub structural: StructuralParams,
}

const INTERCEPT: f64 = -1.0;
const SINGLE_EFFECT: f64 = 2.5;
const PAIR_MAIN: f64 = 1.25;
const PAIR_INTERACTION: f64 = 1.0;
const XI_INTERCEPT: f64 = -0.5;
const THRESHOLD_STEP: f64 = 1.0;

/// Generating parameters for a scenario.
///
/// Items measuring one attribute get an intercept and a main effect split
/// evenly over the levels; paired items get smaller main effects plus a
/// positive first-level interaction. Thresholds are `(0, 1, 2)`, ξ is the
/// intercept row plus the attribute diagonal, and λ slopes are
/// `±U[0.3, 0.6]`.
pub fn generate_params(scenario: &ScenarioSpec, rng: &mut RngStream) -> Result<ParamSet> {
    scenario.validate()?;
    let spec = scenario.model_spec()?;
    let (k, l) = (spec.k(), spec.l());
    let per_level = 1.0 / (l - 1) as f64;
    let basis = spec.meas_basis();

    let mut meas = MeasurementParams::zeros(&spec);
    for j in 0..spec.items() {
        meas.kappa[j] = default_thresholds(CATEGORIES, THRESHOLD_STEP);
        meas.beta[(0, j)] = INTERCEPT;
        let mut set = |h: usize, v: f64| {
            meas.beta[(h, j)] = v;
            meas.delta[(h, j)] = 1;
        };
        match scenario.item_set(j) {
            ItemSet::Single(a) => {
                for lev in 1..l {
                    set(basis.main_effect(a, lev).unwrap(), SINGLE_EFFECT * per_level);
                }
            }
            ItemSet::Pair(a, b) => {
                for lev in 1..l {
                    set(basis.main_effect(a, lev).unwrap(), PAIR_MAIN * per_level);
                    set(basis.main_effect(b, lev).unwrap(), PAIR_MAIN * per_level);
                }
                let h = (0..basis.len())
                    .find(|&h| {
                        basis.column(h).iter().enumerate().all(|(i, &v)| {
                            v == u8::from(i == a || i == b)
                        })
                    })
                    .expect("pair interaction column");
                set(h, PAIR_INTERACTION);
            }
        }
    }
    let active = meas.delta.iter().filter(|&&d| d == 1).count();
    meas.omega = active as f64 / meas.delta.len() as f64;

    let mut gamma = DMatrix::zeros(k, l + 1);
    for a in 0..k {
        gamma[(a, 0)] = f64::NEG_INFINITY;
        gamma[(a, l)] = f64::INFINITY;
        for lev in 2..l {
            gamma[(a, lev)] = (lev - 1) as f64;
        }
    }
    let lambda = DMatrix::from_fn(COVARIATES, k, |_, _| {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        sign * rng.random_range(0.3..0.6)
    });
    let diag = if l == 2 { 1.0 } else { 0.75 };
    let mut xi = DMatrix::zeros(spec.h_otr(), k);
    for a in 0..k {
        xi[(0, a)] = XI_INTERCEPT;
        for lev in 1..l {
            xi[(spec.trans_basis().main_effect(a, lev).unwrap(), a)] = diag;
        }
    }
    let r = SymMatrix::equicorrelation(k, scenario.rho);
    r.cholesky("equicorrelation R")?;
    let structural = StructuralParams {
        gamma,
        lambda,
        xi,
        r,
    };
    structural.validate(&spec)?;
    meas.validate(&spec)?;
    Ok(ParamSet { meas, structural })
}

/// Smallest category-probability gap between two profiles that differ by one
/// level of one attribute and have different linear predictors for an item.
pub fn min_adjacent_separation(meas: &MeasurementParams, spec: &ModelSpec) -> f64 {
    let mut best = f64::INFINITY;
    for c in 0..spec.states() {
        let alpha = spec.profile(c);
        for a in 0..spec.k() {
            let mut up = alpha.0.clone();
            if up[a] as usize + 1 >= spec.l() {
                continue;
            }
            up[a] += 1;
            let c2 = spec.state_of(&up);
            for j in 0..spec.items() {
                let (e1, e2) = (meas.eta(spec, c, j), meas.eta(spec, c2, j));
                if (e1 - e2).abs() < 1e-12 {
                    continue;
                }
                let gap = (0..spec.categories()[j])
                    .map(|m| {
                        (category_prob(m, e1, &meas.kappa[j]) - category_prob(m, e2, &meas.kappa[j]))
                            .abs()
                    })
                    .fold(0.0, f64::max);
                best = best.min(gap);
            }
        }
    }
    best
}

/// Age uniform with unit variance and a fair sex indicator, held constant
/// over waves. Returned as (N·T)×2 respondent-major.
pub fn generate_covariates<R: RngCore>(n: usize, t: usize, rng: &mut R) -> Vec<f64> {
    let half = 3f64.sqrt();
    let mut x = Vec::with_capacity(n * t * COVARIATES);
    for _ in 0..n {
        let age = rng.random_range(-half..half);
        let sex = if rng.random::<bool>() { 1.0 } else { 0.0 };
        for _ in 0..t {
            x.push(age);
            x.push(sex);
        }
    }
    x
}

/// One wave of latent profiles and responses for every respondent.
///
/// `x_wave` is N×D for this wave; `prev` is the N×K profile array of the
/// wave before, `None` for the first wave. Returns (N×K levels, N×J
/// categories).
pub fn generate_wave<R: Rng>(
    params: &ParamSet,
    spec: &ModelSpec,
    n: usize,
    x_wave: &[f64],
    prev: Option<&[u8]>,
    rng: &mut R,
) -> Result<(Vec<u8>, Vec<u16>)> {
    let (k, d, jj) = (spec.k(), spec.covariates(), spec.items());
    if x_wave.len() != n * d {
        return Err(crate::Error::DimensionMismatch {
            context: "wave covariates",
            expected: n * d,
            found: x_wave.len(),
        });
    }
    let chol = params.structural.r.cholesky("R")?.l();
    let mut alpha = vec![0u8; n * k];
    let mut y = vec![0u16; n * jj];
    for i in 0..n {
        let prof = prev.map(|p| AttributeProfile::new(p[i * k..(i + 1) * k].to_vec()));
        let mean = structural_mean(prof.as_ref(), &x_wave[i * d..(i + 1) * d], &params.structural, spec)?;
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let star = &chol * z;
        for a in 0..k {
            let v = mean[a] + star[a];
            let g = params.structural.gamma.row(a);
            alpha[i * k + a] = (1..spec.l()).filter(|&lev| v > g[lev]).count() as u8;
        }
        let c = spec.state_of(&alpha[i * k..(i + 1) * k]);
        for j in 0..jj {
            let ys = params.meas.eta(spec, c, j) + rng.sample::<f64, _>(StandardNormal);
            let kap = &params.meas.kappa[j];
            y[i * jj + j] = (1..spec.categories()[j]).filter(|&m| ys > kap[m]).count() as u16;
        }
    }
    Ok((alpha, y))
}

/// Simulates a full panel from given parameters and covariates.
///
/// The first value drawn from `rng` is a base seed; wave `t` is then
/// generated from `RngStream::new(base, t)`, so any wave can be regenerated
/// from the stored profiles of the wave before it.
pub fn generate_from<R: RngCore>(
    params: &ParamSet,
    spec: &ModelSpec,
    n: usize,
    t: usize,
    x: &[f64],
    rng: &mut R,
) -> Result<(Dataset, Latents)> {
    let (k, d, jj) = (spec.k(), spec.covariates(), spec.items());
    let base = rng.next_u64();
    let mut latents = Latents::zeros(n, t, k);
    let mut y = vec![0u16; n * t * jj];
    let mut prev: Option<Vec<u8>> = None;
    for wave in 0..t {
        let x_wave: Vec<f64> = (0..n)
            .flat_map(|i| x[(i * t + wave) * d..(i * t + wave + 1) * d].iter().copied())
            .collect();
        let mut stream = RngStream::new(base, wave as u64);
        let (alpha, yw) = generate_wave(params, spec, n, &x_wave, prev.as_deref(), &mut stream)?;
        for i in 0..n {
            latents.get_mut(i, wave).copy_from_slice(&alpha[i * k..(i + 1) * k]);
            let r = i * t + wave;
            y[r * jj..(r + 1) * jj].copy_from_slice(&yw[i * jj..(i + 1) * jj]);
        }
        prev = Some(alpha);
    }
    let data = Dataset::new(n, t, spec.categories().to_vec(), d, y, x.to_vec())?;
    Ok((data, latents))
}

/// Covariates and a full panel for a scenario.
pub fn generate_data(
    params: &ParamSet,
    scenario: &ScenarioSpec,
    rng: &mut RngStream,
) -> Result<(Dataset, Latents)> {
    let spec = scenario.model_spec()?;
    let x = generate_covariates(scenario.n, scenario.t, rng);
    generate_from(params, &spec, scenario.n, scenario.t, &x, rng)
}

/// Masks each (respondent, wave) row independently with probability `rate`.
pub fn apply_missingness<R: Rng>(data: &Dataset, rate: f64, rng: &mut R) -> Result<Dataset> {
    if !(0.0..1.0).contains(&rate) {
        return Err(crate::Error::invalid(format!("missing rate {rate} outside [0, 1)")));
    }
    let mask: Vec<bool> = (0..data.n() * data.t()).map(|_| rng.random::<f64>() < rate).collect();
    data.with_mask(&mask)
}
