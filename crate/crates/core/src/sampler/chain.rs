use nalgebra::DMatrix;

use super::config::ChainConfig;
use super::state::ChainState;
use super::steps::Sampler;
use crate::diagnostics::loglik_rows;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::model::{Dataset, ExpandedParams, MeasurementParams, ModelSpec, StructuralParams};
use crate::rng::RngStream;
use rand::RngCore;

/// Block order of one sweep, recorded with every chain.
pub const SWEEP_ORDER: &str = "kappa_ystar(j) delta_beta(j) for each item; \
alpha_cell(n,t,k) with t outermost; gamma(k); sigma_zeta; omega; missing_y";

/// Column convention of the design coefficients, recorded with every chain.
pub const COLUMN_CONVENTION: &str = "lexicographic Kronecker multi-index, \
attribute 1 most significant, filtered by interaction order";

/// How often the state invariants are spot-checked.
const CHECK_EVERY: usize = 100;

/// One retained draw on the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub meas: MeasurementParams,
    pub structural: StructuralParams,
    /// Share of (n, t) rows in each latent state.
    pub class_freq: Vec<f64>,
    /// Conditional log-likelihood per respondent.
    pub loglik: Vec<f64>,
}

impl Draw {
    /// Names of the flattened columns, 1-based indices in brackets.
    ///
    /// Only free quantities are stored: fixed thresholds and the diagonal
    /// and lower triangle of R are implied.
    pub fn column_names(spec: &ModelSpec, respondents: usize) -> Vec<String> {
        let mut names = Vec::new();
        let (h, jj, kk) = (spec.h(), spec.items(), spec.k());
        for group in ["beta", "delta"] {
            for j in 0..jj {
                for r in 0..h {
                    names.push(format!("{group}[{},{}]", r + 1, j + 1));
                }
            }
        }
        for (j, &m) in spec.categories().iter().enumerate() {
            for i in 2..m {
                names.push(format!("kappa[{},{}]", j + 1, i));
            }
        }
        names.push("omega".into());
        for k in 0..kk {
            for l in 2..spec.l() {
                names.push(format!("gamma[{},{}]", k + 1, l));
            }
        }
        for k in 0..kk {
            for d in 0..spec.covariates() {
                names.push(format!("lambda[{},{}]", d + 1, k + 1));
            }
        }
        for k in 0..kk {
            for r in 0..spec.h_otr() {
                names.push(format!("xi[{},{}]", r + 1, k + 1));
            }
        }
        for b in 0..kk {
            for a in 0..b {
                names.push(format!("R[{},{}]", a + 1, b + 1));
            }
        }
        for c in 0..spec.states() {
            names.push(format!("class_freq[{}]", c + 1));
        }
        for n in 0..respondents {
            names.push(format!("loglik[{}]", n + 1));
        }
        names
    }

    /// Flattened values in the order of [`Draw::column_names`].
    pub fn to_row(&self, spec: &ModelSpec) -> Vec<f64> {
        let mut row = Vec::new();
        row.extend(self.meas.beta.iter());
        row.extend(self.meas.delta.iter().map(|&d| d as f64));
        for (kap, &m) in self.meas.kappa.iter().zip(spec.categories()) {
            row.extend(&kap[2..m]);
        }
        row.push(self.meas.omega);
        let s = &self.structural;
        for k in 0..spec.k() {
            row.extend((2..spec.l()).map(|l| s.gamma[(k, l)]));
        }
        row.extend(s.lambda.iter());
        row.extend(s.xi.iter());
        for b in 0..spec.k() {
            for a in 0..b {
                row.push(s.r[(a, b)]);
            }
        }
        row.extend(&self.class_freq);
        row.extend(&self.loglik);
        row
    }

    /// Inverse of [`Draw::to_row`].
    pub fn from_row(row: &[f64], spec: &ModelSpec, respondents: usize) -> Result<Self> {
        let expected = Self::column_names(spec, respondents).len();
        if row.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "draw row",
                expected,
                found: row.len(),
            });
        }
        let (h, jj, kk, ll) = (spec.h(), spec.items(), spec.k(), spec.l());
        let mut it = row.iter().copied();
        let mut take = |n: usize| -> Vec<f64> { it.by_ref().take(n).collect() };
        let beta = DMatrix::from_column_slice(h, jj, &take(h * jj));
        let delta_f = take(h * jj);
        if delta_f.iter().any(|&d| d != 0.0 && d != 1.0) {
            return Err(Error::Corrupt("activation indicator outside {0, 1}".into()));
        }
        let delta = DMatrix::from_iterator(h, jj, delta_f.iter().map(|&d| d as u8));
        let kappa = spec
            .categories()
            .iter()
            .map(|&m| {
                let mut k = vec![f64::NEG_INFINITY, 0.0];
                k.extend(take(m.saturating_sub(2)));
                k.push(f64::INFINITY);
                k
            })
            .collect();
        let omega = take(1)[0];
        let mut gamma = DMatrix::zeros(kk, ll + 1);
        for k in 0..kk {
            gamma[(k, 0)] = f64::NEG_INFINITY;
            gamma[(k, ll)] = f64::INFINITY;
            for (l, v) in (2..ll).zip(take(ll - 2)) {
                gamma[(k, l)] = v;
            }
        }
        let lambda = DMatrix::from_column_slice(spec.covariates(), kk, &take(spec.covariates() * kk));
        let xi = DMatrix::from_column_slice(spec.h_otr(), kk, &take(spec.h_otr() * kk));
        let mut r = DMatrix::identity(kk, kk);
        for b in 0..kk {
            for a in 0..b {
                let v = take(1)[0];
                r[(a, b)] = v;
                r[(b, a)] = v;
            }
        }
        let class_freq = take(spec.states());
        let loglik = take(respondents);
        Ok(Self {
            meas: MeasurementParams {
                beta,
                kappa,
                delta,
                omega,
            },
            structural: StructuralParams {
                gamma,
                lambda,
                xi,
                r: SymMatrix::new(r)?,
            },
            class_freq,
            loglik,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainMeta {
    pub version: String,
    pub spec: ModelSpec,
    pub config: ChainConfig,
    pub respondents: usize,
    pub waves: usize,
    pub seed: u64,
    pub stream: u64,
    pub sweep_order: String,
    pub column_convention: String,
    /// Threshold acceptance rate per item (NaN when nothing was proposed).
    pub kappa_acceptance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub meta: ChainMeta,
    pub draws: Vec<Draw>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// S×N log-likelihood matrix.
    pub fn loglik_matrix(&self) -> DMatrix<f64> {
        let n = self.meta.respondents;
        DMatrix::from_fn(self.draws.len(), n, |s, i| self.draws[s].loglik[i])
    }

    /// Mean acceptance over items that have free thresholds.
    pub fn mean_kappa_acceptance(&self) -> Option<f64> {
        let rates: Vec<f64> = self
            .meta
            .kappa_acceptance
            .iter()
            .copied()
            .filter(|r| r.is_finite())
            .collect();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }
}

/// Original-scale structural parameters and α* from the expanded twin.
pub fn to_original_scale(
    expanded: &ExpandedParams,
    spec: &ModelSpec,
) -> Result<(StructuralParams, DMatrix<f64>)> {
    expanded.to_original(spec)
}

/// Runs `burn_in + post_burn_in` sweeps and keeps every `thin`-th
/// post-burn-in state.
pub fn run_chain(
    data: &Dataset,
    spec: &ModelSpec,
    config: &ChainConfig,
    rng: &mut RngStream,
) -> Result<Chain> {
    run_chain_observed(data, spec, config, rng, |_, _| {})
}

/// [`run_chain`] with a callback after every sweep.
pub fn run_chain_observed<F>(
    data: &Dataset,
    spec: &ModelSpec,
    config: &ChainConfig,
    rng: &mut RngStream,
    mut observe: F,
) -> Result<Chain>
where
    F: FnMut(usize, &ChainState),
{
    let sampler = Sampler::new(data, spec, config)?;
    let mut st = best_start(&sampler, config, rng)?;
    let total = config.burn_in + config.post_burn_in;
    let mut draws = Vec::with_capacity(config.retained());
    for sweep in 1..=total {
        let wrap = |e: Error| Error::Sweep { sweep, source: Box::new(e) };
        sampler.sweep(&mut st, rng).map_err(wrap)?;
        if sweep % CHECK_EVERY == 0 {
            sampler.check_invariants(&st).map_err(wrap)?;
        }
        if sweep > config.burn_in && (sweep - config.burn_in) % config.thin == 0 {
            draws.push(record(&st, data, spec).map_err(wrap)?);
        }
        if sweep % 1000 == 0 {
            log::info!("sweep {sweep}/{total}");
        }
        observe(sweep, &st);
    }
    let kappa_acceptance = st
        .kappa_proposed
        .iter()
        .zip(&st.kappa_accepted)
        .map(|(&p, &a)| if p == 0 { f64::NAN } else { a as f64 / p as f64 })
        .collect();
    Ok(Chain {
        meta: ChainMeta {
            version: crate::VERSION.to_string(),
            spec: spec.clone(),
            config: config.clone(),
            respondents: data.n(),
            waves: data.t(),
            seed: rng.seed(),
            stream: rng.stream_id(),
            sweep_order: SWEEP_ORDER.to_string(),
            column_convention: COLUMN_CONVENTION.to_string(),
            kappa_acceptance,
        },
        draws,
    })
}

/// Screens `config.starts` random initializations with short pilot runs
/// and returns the end state of the one whose second half had the highest
/// mean log-likelihood. Mixture-type posteriors have absorbing local modes
/// (a redundant class, say) that a single random start falls into now and
/// then; the pilots make that unlikely.
fn best_start(sampler: &Sampler, config: &ChainConfig, rng: &mut RngStream) -> Result<ChainState> {
    let (data, spec) = (sampler.data(), sampler.spec());
    let pilot = config.pilot_length();
    if pilot == 0 {
        let st = sampler.init_state(rng)?;
        sampler
            .check_invariants(&st)
            .map_err(|e| Error::Sweep { sweep: 0, source: Box::new(e) })?;
        return Ok(st);
    }
    let mut best: Option<(f64, ChainState)> = None;
    for start in 0..config.starts {
        let mut prng = RngStream::new(rng.next_u64(), start as u64);
        let mut st = sampler.init_state(&mut prng)?;
        sampler
            .check_invariants(&st)
            .map_err(|e| Error::Sweep { sweep: 0, source: Box::new(e) })?;
        let mut score = 0.0;
        for sweep in 1..=pilot {
            sampler
                .sweep(&mut st, &mut prng)
                .map_err(|e| Error::Sweep { sweep, source: Box::new(e) })?;
            if 2 * sweep > pilot {
                score += loglik_rows(data, spec, &st.meas, &st.latents).iter().sum::<f64>();
            }
        }
        score /= (pilot - pilot / 2) as f64;
        log::debug!("start {} pilot log-likelihood {score:.2}", start + 1);
        if best.as_ref().map_or(true, |(b, _)| score > *b) {
            best = Some((score, st));
        }
    }
    let (_, mut st) = best.expect("at least two starts");
    st.kappa_accepted.iter_mut().for_each(|a| *a = 0);
    st.kappa_proposed.iter_mut().for_each(|p| *p = 0);
    Ok(st)
}

fn record(st: &ChainState, data: &Dataset, spec: &ModelSpec) -> Result<Draw> {
    let (structural, _) = st.expanded.to_original(spec)?;
    Ok(Draw {
        meas: st.meas.clone(),
        structural,
        class_freq: st.class_frequencies(spec.states()),
        loglik: loglik_rows(data, spec, &st.meas, &st.latents),
    })
}
