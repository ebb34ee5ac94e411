use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::config::ChainConfig;
use super::state::{impute_initial, initial_expanded, ChainState};
use crate::dist::{
    log_norm_cdf, log_norm_interval, norm_interval, sample_categorical, sample_inverse_wishart,
    sample_log_categorical, sample_matrix_normal_factored, sample_trunc_exponential,
    sample_truncated_normal, StdTruncNormal,
};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::model::{
    default_thresholds, Dataset, Latents, MeasurementParams, ModelSpec, MonotoneConstraints,
};

/// Conditional moments of one coefficient given the others and Y*_j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabConditional {
    /// Mean `c1`.
    pub mean: f64,
    /// Variance `c2²`.
    pub var: f64,
    /// Monotone lower bound `L_hj`.
    pub lower: f64,
}

impl SlabConditional {
    /// `dd` is `d′d` over all rows, `dy` is `d′Y*_j`.
    pub fn new(
        dd: &DMatrix<f64>,
        dy: &[f64],
        beta: &[f64],
        h: usize,
        sigma_beta2: f64,
        lower: f64,
    ) -> Self {
        let var = 1.0 / (dd[(h, h)] + 1.0 / sigma_beta2);
        let cross: f64 = (0..beta.len())
            .filter(|&i| i != h)
            .map(|i| dd[(h, i)] * beta[i])
            .sum();
        Self {
            mean: var * (dy[h] - cross),
            var,
            lower,
        }
    }

    /// P(δ = 1 | rest) with β integrated out. Forced to 1 when β = 0 would
    /// leave the monotone region.
    pub fn inclusion_probability(&self, omega: f64, sigma_beta2: f64) -> f64 {
        if self.lower > 0.0 {
            return 1.0;
        }
        let sd = self.var.sqrt();
        let log_a = omega.ln() - log_norm_cdf(-self.lower / sigma_beta2.sqrt())
            + 0.5 * (self.var / sigma_beta2).ln()
            + self.mean * self.mean / (2.0 * self.var)
            + log_norm_cdf((self.mean - self.lower) / sd);
        let log_b = (1.0 - omega).ln();
        if log_a == f64::NEG_INFINITY {
            return 0.0;
        }
        if log_b == f64::NEG_INFINITY {
            return 1.0;
        }
        1.0 / (1.0 + (log_b - log_a).exp())
    }
}

/// One chain's sampler: borrowed data and settings plus precomputed
/// monotonicity constraints.
pub struct Sampler<'a> {
    data: &'a Dataset,
    spec: &'a ModelSpec,
    config: &'a ChainConfig,
    constraints: MonotoneConstraints,
}

impl<'a> Sampler<'a> {
    pub fn new(data: &'a Dataset, spec: &'a ModelSpec, config: &'a ChainConfig) -> Result<Self> {
        if data.categories() != spec.categories() {
            return Err(Error::invalid("dataset categories differ from the model spec"));
        }
        if data.d() != spec.covariates() {
            return Err(Error::DimensionMismatch {
                context: "covariate count",
                expected: spec.covariates(),
                found: data.d(),
            });
        }
        config.validate(spec.k())?;
        Ok(Self {
            data,
            spec,
            config,
            constraints: MonotoneConstraints::new(spec),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn constraints(&self) -> &MonotoneConstraints {
        &self.constraints
    }

    /// Starting state: uniform profiles, zero coefficients, evenly spaced
    /// thresholds, identity covariance, and augmented variables drawn from
    /// their truncated conditionals.
    pub fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChainState> {
        let (spec, data) = (self.spec, self.data);
        let mut meas = MeasurementParams::zeros(spec);
        for (kap, &m) in meas.kappa.iter_mut().zip(spec.categories()) {
            *kap = if m > 2 {
                default_thresholds(m, 3.0 / (m - 2) as f64)
            } else {
                default_thresholds(m, 1.0)
            };
        }
        meas.omega = self.config.omega0 / (self.config.omega0 + self.config.omega1);
        let mut latents = Latents::zeros(data.n(), data.t(), spec.k());
        for a in latents.alpha.iter_mut() {
            *a = rng.random_range(0..spec.l()) as u8;
        }
        let expanded = initial_expanded(spec, data.n() * data.t());
        let y = impute_initial(data);
        let mut st = ChainState::assemble(spec, data, meas, expanded, latents, y);
        for j in 0..spec.items() {
            self.refresh_y_star(&mut st, j, rng)?;
        }
        for n in 0..data.n() {
            for t in 0..data.t() {
                for k in 0..spec.k() {
                    self.draw_alpha_star(&mut st, n, t, k, rng)?;
                }
            }
        }
        Ok(st)
    }

    /// A full sweep in the documented block order.
    pub fn sweep<R: Rng + ?Sized>(&self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        for j in 0..self.spec.items() {
            self.step_kappa_ystar(st, j, rng)?;
            self.step_delta_beta(st, j, rng)?;
        }
        for t in 0..self.data.t() {
            for n in 0..self.data.n() {
                for k in 0..self.spec.k() {
                    self.step_alpha_cell(st, n, t, k, rng)?;
                }
            }
        }
        for k in 0..self.spec.k() {
            self.step_gamma(st, k, rng)?;
        }
        self.step_sigma_zeta(st, rng)?;
        self.step_omega(st, rng)?;
        self.step_missing_y(st, rng)?;
        Ok(())
    }

    pub fn check_invariants(&self, st: &ChainState) -> Result<()> {
        match st.invariant_violation(self.spec, self.data, &self.constraints) {
            None => Ok(()),
            Some(msg) => Err(Error::invalid(format!("state invariant violated: {msg}"))),
        }
    }

    // ---- thresholds and augmented responses ----

    /// Counts of (latent state, category) pairs for item `j`.
    fn cell_counts(&self, st: &ChainState, j: usize) -> Vec<u64> {
        let m = self.spec.categories()[j];
        let jj = self.spec.items();
        let mut counts = vec![0u64; self.spec.states() * m];
        for (r, &c) in st.state_idx.iter().enumerate() {
            counts[c * m + st.y[r * jj + j] as usize] += 1;
        }
        counts
    }

    fn collapsed_loglik(&self, st: &ChainState, j: usize, kappa: &[f64], counts: &[u64]) -> f64 {
        let m = self.spec.categories()[j];
        let jj = self.spec.items();
        let mut total = 0.0;
        for c in 0..self.spec.states() {
            let eta = st.eta[c * jj + j];
            for y in 0..m {
                let n = counts[c * m + y];
                if n > 0 {
                    total += n as f64 * log_norm_interval(kappa[y] - eta, kappa[y + 1] - eta);
                }
            }
        }
        total
    }

    /// Log Metropolis–Hastings ratio for moving item `j` to `proposal`,
    /// with Y*_j integrated out. −∞ for a proposal outside the support.
    pub fn kappa_log_accept(&self, st: &ChainState, j: usize, proposal: &[f64]) -> f64 {
        let m = self.spec.categories()[j];
        let current = &st.meas.kappa[j];
        let ordered = proposal.len() == m + 1
            && proposal[0] == f64::NEG_INFINITY
            && proposal[1] == 0.0
            && proposal[m] == f64::INFINITY
            && proposal.windows(2).all(|w| w[0] < w[1]);
        if !ordered {
            return f64::NEG_INFINITY;
        }
        let counts = self.cell_counts(st, j);
        let lik = self.collapsed_loglik(st, j, proposal, &counts)
            - self.collapsed_loglik(st, j, current, &counts);
        let sd = self.config.sigma_kappa2.sqrt();
        let mut hastings = 0.0;
        for i in 2..m {
            hastings += log_norm_interval(
                (proposal[i - 1] - current[i]) / sd,
                (current[i + 1] - current[i]) / sd,
            );
            hastings -= log_norm_interval(
                (current[i - 1] - proposal[i]) / sd,
                (proposal[i + 1] - proposal[i]) / sd,
            );
        }
        lik + hastings
    }

    /// Order-preserving random-walk update of the free thresholds of item
    /// `j` followed by a fresh draw of Y*_j. Returns whether the move was
    /// accepted (always true when there is nothing to move).
    pub fn step_kappa_ystar<R: Rng + ?Sized>(
        &self,
        st: &mut ChainState,
        j: usize,
        rng: &mut R,
    ) -> Result<bool> {
        let m = self.spec.categories()[j];
        let mut accepted = true;
        if m > 2 {
            let current = st.meas.kappa[j].clone();
            let mut proposal = current.clone();
            for i in 2..m {
                proposal[i] = sample_truncated_normal(
                    current[i],
                    self.config.sigma_kappa2,
                    proposal[i - 1],
                    current[i + 1],
                    rng,
                )?;
                if proposal[i] >= current[i + 1] || proposal[i] <= proposal[i - 1] {
                    // rounding at a window edge; treat as an invalid proposal
                    proposal[i] = f64::NAN;
                }
            }
            let log_r = self.kappa_log_accept(st, j, &proposal);
            let u: f64 = rng.sample(Open01);
            accepted = u.ln() < log_r;
            st.kappa_proposed[j] += 1;
            if accepted {
                st.kappa_accepted[j] += 1;
                st.meas.kappa[j] = proposal;
            }
        }
        self.refresh_y_star(st, j, rng)?;
        Ok(accepted)
    }

    fn refresh_y_star<R: Rng + ?Sized>(&self, st: &mut ChainState, j: usize, rng: &mut R) -> Result<()> {
        let m = self.spec.categories()[j];
        let jj = self.spec.items();
        let kap = &st.meas.kappa[j];
        let mut cells: Vec<Option<StdTruncNormal>> = vec![None; self.spec.states() * m];
        for r in 0..st.state_idx.len() {
            let c = st.state_idx[r];
            let y = st.y[r * jj + j] as usize;
            let eta = st.eta[c * jj + j];
            let cell = &mut cells[c * m + y];
            if cell.is_none() {
                *cell = Some(StdTruncNormal::new(kap[y] - eta, kap[y + 1] - eta)?);
            }
            let z = cell.as_ref().map(|s| s.sample(rng)).unwrap_or(0.0);
            st.y_star[r * jj + j] = clamp_window(eta + z, kap[y], kap[y + 1]);
        }
        Ok(())
    }

    // ---- coefficients and activations ----

    /// `d′d` and `d′Y*_j` aggregated over latent states.
    pub fn sufficient_stats(&self, st: &ChainState, j: usize) -> (DMatrix<f64>, Vec<f64>) {
        let (s, h, jj) = (self.spec.states(), self.spec.h(), self.spec.items());
        let mut count = vec![0.0; s];
        let mut sum = vec![0.0; s];
        for (r, &c) in st.state_idx.iter().enumerate() {
            count[c] += 1.0;
            sum[c] += st.y_star[r * jj + j];
        }
        let mut dd = DMatrix::zeros(h, h);
        let mut dy = vec![0.0; h];
        for c in 0..s {
            if count[c] == 0.0 {
                continue;
            }
            let d = self.spec.meas_row(c);
            for a in 0..h {
                if d[a] == 0.0 {
                    continue;
                }
                dy[a] += sum[c];
                for b in 0..h {
                    dd[(a, b)] += count[c] * d[b];
                }
            }
        }
        (dd, dy)
    }

    /// Collapsed Gibbs update of δ_hj followed by β_hj, for every h.
    pub fn step_delta_beta<R: Rng + ?Sized>(
        &self,
        st: &mut ChainState,
        j: usize,
        rng: &mut R,
    ) -> Result<()> {
        let (dd, dy) = self.sufficient_stats(st, j);
        let sb2 = self.config.sigma_beta2;
        let mut beta: Vec<f64> = st.meas.beta.column(j).iter().copied().collect();
        for h in 0..self.spec.h() {
            let lower = self.constraints.truncation_point(h, &beta);
            let cond = SlabConditional::new(&dd, &dy, &beta, h, sb2, lower);
            let active = if h == 0 {
                true
            } else {
                let p = cond.inclusion_probability(st.meas.omega, sb2);
                rng.random::<f64>() < p
            };
            beta[h] = if active {
                let draw = sample_truncated_normal(cond.mean, cond.var, lower, f64::INFINITY, rng)?;
                if draw <= lower { lower.next_up() } else { draw }
            } else {
                0.0
            };
            st.meas.delta[(h, j)] = active as u8;
        }
        st.meas.beta.column_mut(j).copy_from_slice(&beta);
        st.refresh_eta(self.spec, j);
        Ok(())
    }

    // ---- latent profiles ----

    /// Conditional moments of α̃*_{nk}^t given the other attributes.
    fn conditional_moments(&self, st: &ChainState, n: usize, t: usize, k: usize) -> (f64, f64) {
        let r = self.data.row(n, t);
        let mean = st.structural_mean_row(self.spec, self.data, n, t);
        let p = &st.precision;
        let mut shift = 0.0;
        for i in 0..self.spec.k() {
            if i != k {
                shift += p[(k, i)] * (st.expanded.alpha_star_t[(r, i)] - mean[i]);
            }
        }
        (mean[k] - shift / p[(k, k)], 1.0 / p[(k, k)])
    }

    /// Unnormalized log weights of α_{nk}^t = 0..L−1.
    pub fn alpha_cell_log_weights(&self, st: &ChainState, n: usize, t: usize, k: usize) -> Vec<f64> {
        let spec = self.spec;
        let (kk, ll, jj) = (spec.k(), spec.l(), spec.items());
        let r = self.data.row(n, t);
        let c = st.state_idx[r];
        let stride = ll.pow((kk - 1 - k) as u32);
        let base = c - (st.latents.get(n, t)[k] as usize) * stride;
        let (mu, var) = self.conditional_moments(st, n, t, k);
        let sd = var.sqrt();
        let ys = &st.y_star[r * jj..(r + 1) * jj];
        let gamma = &st.expanded.gamma_t;
        let ahead = t + 1 < self.data.t();
        let mut weights = Vec::with_capacity(ll);
        for l in 0..ll {
            let cl = base + l * stride;
            let eta = &st.eta[cl * jj..(cl + 1) * jj];
            let mut w: f64 = ys
                .iter()
                .zip(eta)
                .map(|(y, e)| -0.5 * (y - e) * (y - e))
                .sum();
            if ahead {
                let r1 = r + 1;
                let resid: Vec<f64> = (0..kk)
                    .map(|a| {
                        st.expanded.alpha_star_t[(r1, a)]
                            - st.cov_mean[r1 * kk + a]
                            - st.trans_mean[cl * kk + a]
                    })
                    .collect();
                let mut q = 0.0;
                for a in 0..kk {
                    for b in 0..kk {
                        q += resid[a] * st.precision[(a, b)] * resid[b];
                    }
                }
                w -= 0.5 * q;
            }
            w += log_norm_interval((gamma[(k, l)] - mu) / sd, (gamma[(k, l + 1)] - mu) / sd);
            weights.push(w);
        }
        weights
    }

    /// Draws α_{nk}^t with α̃* integrated out, then α̃*_{nk}^t given it.
    pub fn step_alpha_cell<R: Rng + ?Sized>(
        &self,
        st: &mut ChainState,
        n: usize,
        t: usize,
        k: usize,
        rng: &mut R,
    ) -> Result<()> {
        let weights = self.alpha_cell_log_weights(st, n, t, k);
        let mut scratch = Vec::with_capacity(weights.len());
        let l = sample_log_categorical(&weights, &mut scratch, rng)
            .ok_or(Error::WeightUnderflow { n, t, k })?;
        let r = self.data.row(n, t);
        let stride = self.spec.l().pow((self.spec.k() - 1 - k) as u32);
        let old = st.latents.get(n, t)[k] as usize;
        st.state_idx[r] = st.state_idx[r] - old * stride + l * stride;
        st.latents.get_mut(n, t)[k] = l as u8;
        self.draw_alpha_star(st, n, t, k, rng)
    }

    fn draw_alpha_star<R: Rng + ?Sized>(
        &self,
        st: &mut ChainState,
        n: usize,
        t: usize,
        k: usize,
        rng: &mut R,
    ) -> Result<()> {
        let (mu, var) = self.conditional_moments(st, n, t, k);
        let l = st.latents.get(n, t)[k] as usize;
        let (lo, hi) = (st.expanded.gamma_t[(k, l)], st.expanded.gamma_t[(k, l + 1)]);
        let v = sample_truncated_normal(mu, var, lo, hi, rng)?;
        st.expanded.alpha_star_t[(self.data.row(n, t), k)] = clamp_window(v, lo, hi);
        Ok(())
    }

    // ---- structural thresholds ----

    /// Updates the free thresholds of attribute `k`; no-op for L = 2.
    pub fn step_gamma<R: Rng + ?Sized>(&self, st: &mut ChainState, k: usize, rng: &mut R) -> Result<()> {
        let ll = self.spec.l();
        if ll < 3 {
            return Ok(());
        }
        let mut top = vec![f64::NEG_INFINITY; ll];
        let mut bottom = vec![f64::INFINITY; ll];
        let kk = self.spec.k();
        for r in 0..st.state_idx.len() {
            let level = st.latents.alpha[r * kk + k] as usize;
            let v = st.expanded.alpha_star_t[(r, k)];
            top[level] = top[level].max(v);
            bottom[level] = bottom[level].min(v);
        }
        for l in 2..ll {
            let gamma = &st.expanded.gamma_t;
            let lo = top[l - 1].max(gamma[(k, l - 1)]);
            let hi = bottom[l].min(gamma[(k, l + 1)]);
            if !(lo < hi) {
                return Err(Error::InvalidBounds { lo, hi });
            }
            let draw = if l < ll - 1 {
                let u: f64 = rng.sample(Open01);
                lo + u * (hi - lo)
            } else {
                sample_trunc_exponential(self.config.rate_a, lo, hi, rng)?
            };
            st.expanded.gamma_t[(k, l)] = if draw <= lo {
                lo.next_up()
            } else if draw >= hi {
                hi.next_down()
            } else {
                draw
            };
        }
        Ok(())
    }

    // ---- covariance and structural coefficients ----

    /// `W′W`, `W′α̃*` and the number of rows.
    pub fn structural_cross_products(&self, st: &ChainState) -> (DMatrix<f64>, DMatrix<f64>) {
        let (d, h, kk) = (self.spec.covariates(), self.spec.h_otr(), self.spec.k());
        let p = d + h;
        let mut wtw = DMatrix::zeros(p, p);
        let mut wta = DMatrix::zeros(p, kk);
        let mut w = vec![0.0; p];
        for n in 0..self.data.n() {
            for t in 0..self.data.t() {
                let r = self.data.row(n, t);
                self.fill_w_row(st, n, t, &mut w);
                for a in 0..p {
                    if w[a] == 0.0 {
                        continue;
                    }
                    for b in 0..p {
                        wtw[(a, b)] += w[a] * w[b];
                    }
                    for c in 0..kk {
                        wta[(a, c)] += w[a] * st.expanded.alpha_star_t[(r, c)];
                    }
                }
            }
        }
        (wtw, wta)
    }

    fn fill_w_row(&self, st: &ChainState, n: usize, t: usize, w: &mut [f64]) {
        let d = self.spec.covariates();
        w[..d].copy_from_slice(self.data.x_row(n, t));
        if t == 0 {
            w[d..].fill(0.0);
        } else {
            let prev = st.state_idx[self.data.row(n, t - 1)];
            w[d..].copy_from_slice(self.spec.trans_row(prev));
        }
    }

    /// Posterior quantities `(L̂₂, W′W + I, S)` of the conjugate update.
    pub fn sigma_zeta_posterior(
        &self,
        st: &ChainState,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let (wtw, wta) = self.structural_cross_products(st);
        let p = wtw.nrows();
        let a = wtw + DMatrix::identity(p, p);
        let chol = SymMatrix::new(a.clone())?.cholesky("W'W + I")?;
        let l_hat = chol.solve(&wta);
        let kk = self.spec.k();
        let mut s = l_hat.transpose() * &l_hat;
        let mut w = vec![0.0; p];
        let mut resid = vec![0.0; kk];
        for n in 0..self.data.n() {
            for t in 0..self.data.t() {
                let r = self.data.row(n, t);
                self.fill_w_row(st, n, t, &mut w);
                for c in 0..kk {
                    let fit: f64 = (0..p).map(|i| w[i] * l_hat[(i, c)]).sum();
                    resid[c] = st.expanded.alpha_star_t[(r, c)] - fit;
                }
                for a in 0..kk {
                    for b in 0..kk {
                        s[(a, b)] += resid[a] * resid[b];
                    }
                }
            }
        }
        Ok((l_hat, a, s))
    }

    /// Σ from its inverse Wishart conditional (ζ̃ integrated out), then ζ̃
    /// from its matrix normal conditional.
    pub fn step_sigma_zeta<R: Rng + ?Sized>(&self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let (l_hat, a, s) = self.sigma_zeta_posterior(st)?;
        let kk = self.spec.k();
        let rows = (self.data.n() * self.data.t()) as f64;
        let scale = SymMatrix::new(DMatrix::identity(kk, kk) + s)?;
        let sigma = sample_inverse_wishart(&scale, rows + self.config.v0_for(kk), rng)?;
        let a_chol = SymMatrix::new(a)?.cholesky("W'W + I")?;
        let row_factor = a_chol
            .l()
            .transpose()
            .solve_upper_triangular(&DMatrix::identity(l_hat.nrows(), l_hat.nrows()))
            .ok_or(Error::NotPositiveDefinite("W'W + I"))?;
        let col_chol = sigma.cholesky("Sigma")?.l();
        st.expanded.zeta_t = sample_matrix_normal_factored(&l_hat, &row_factor, &col_chol, rng);
        st.expanded.sigma = sigma;
        st.refresh_structural(self.spec, self.data);
        Ok(())
    }

    pub fn step_omega<R: Rng + ?Sized>(&self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let active = st.meas.delta.iter().map(|&d| d as f64).sum::<f64>();
        let total = st.meas.delta.len() as f64;
        let beta = Beta::new(active + self.config.omega0, total - active + self.config.omega1)
            .map_err(|e| Error::invalid(format!("omega conditional: {e}")))?;
        st.meas.omega = beta.sample(rng);
        Ok(())
    }

    /// Redraws responses of masked rows from their categorical conditionals,
    /// then the matching Y*.
    pub fn step_missing_y<R: Rng + ?Sized>(&self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let jj = self.spec.items();
        let mut probs = Vec::new();
        for (r, &masked) in self.data.mask().iter().enumerate() {
            if !masked {
                continue;
            }
            let c = st.state_idx[r];
            for j in 0..jj {
                let kap = &st.meas.kappa[j];
                let eta = st.eta[c * jj + j];
                probs.clear();
                probs.extend((0..self.spec.categories()[j]).map(|m| norm_interval(kap[m] - eta, kap[m + 1] - eta)));
                let y = sample_categorical(&probs, rng)?;
                st.y[r * jj + j] = y as u16;
                let v = sample_truncated_normal(eta, 1.0, kap[y], kap[y + 1], rng)?;
                st.y_star[r * jj + j] = clamp_window(v, kap[y], kap[y + 1]);
            }
        }
        Ok(())
    }
}

/// Pulls a draw that rounding pushed onto or past a window edge back inside
/// `(lo, hi]`.
#[inline]
fn clamp_window(v: f64, lo: f64, hi: f64) -> f64 {
    if v <= lo {
        lo.next_up()
    } else if v > hi {
        hi
    } else {
        v
    }
}
