use nalgebra::DMatrix;

use crate::linalg::SymMatrix;
use crate::model::{
    Dataset, ExpandedParams, Latents, MeasurementParams, ModelSpec, MonotoneConstraints, MISSING,
};

/// Everything one chain mutates: parameters on the expanded scale, the
/// measurement parameters, latent profiles and augmented variables, plus
/// caches derived from them.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub meas: MeasurementParams,
    pub expanded: ExpandedParams,
    pub latents: Latents,
    /// Responses with masked rows filled by the current imputation.
    pub y: Vec<u16>,
    /// Augmented continuous responses, (N·T)×J row-major.
    pub y_star: Vec<f64>,
    pub kappa_accepted: Vec<u64>,
    pub kappa_proposed: Vec<u64>,
    /// Latent state index per (n, t) row.
    pub(crate) state_idx: Vec<usize>,
    /// `d_c·β_j` at `c·J + j`.
    pub(crate) eta: Vec<f64>,
    pub(crate) precision: DMatrix<f64>,
    /// `d_otr(c)·ξ̃` at `c·K + k`.
    pub(crate) trans_mean: Vec<f64>,
    /// `x_n^t·λ̃` at `row·K + k`.
    pub(crate) cov_mean: Vec<f64>,
}

impl ChainState {
    /// Bare state around the given parameters and latents; augmented
    /// variables are left at zero and caches are filled.
    pub(crate) fn assemble(
        spec: &ModelSpec,
        data: &Dataset,
        meas: MeasurementParams,
        expanded: ExpandedParams,
        latents: Latents,
        y: Vec<u16>,
    ) -> Self {
        let rows = data.n() * data.t();
        let j = spec.items();
        let mut st = Self {
            meas,
            expanded,
            latents,
            y,
            y_star: vec![0.0; rows * j],
            kappa_accepted: vec![0; j],
            kappa_proposed: vec![0; j],
            state_idx: vec![0; rows],
            eta: vec![0.0; spec.states() * j],
            precision: DMatrix::identity(spec.k(), spec.k()),
            trans_mean: vec![0.0; spec.states() * spec.k()],
            cov_mean: vec![0.0; rows * spec.k()],
        };
        for r in 0..rows {
            let (n, t) = (r / data.t(), r % data.t());
            st.state_idx[r] = spec.state_of(st.latents.get(n, t));
        }
        for item in 0..j {
            st.refresh_eta(spec, item);
        }
        st.refresh_structural(spec, data);
        st
    }

    pub(crate) fn refresh_eta(&mut self, spec: &ModelSpec, j: usize) {
        let jj = spec.items();
        for c in 0..spec.states() {
            self.eta[c * jj + j] = self.meas.eta(spec, c, j);
        }
    }

    /// Recomputes the caches that depend on Σ and ζ̃.
    pub(crate) fn refresh_structural(&mut self, spec: &ModelSpec, data: &Dataset) {
        let k = spec.k();
        let d = spec.covariates();
        self.precision = self
            .expanded
            .sigma
            .cholesky("Sigma")
            .map(|c| c.inverse())
            .unwrap_or_else(|_| DMatrix::identity(k, k));
        let zeta = &self.expanded.zeta_t;
        for c in 0..spec.states() {
            let row = spec.trans_row(c);
            for a in 0..k {
                self.trans_mean[c * k + a] =
                    row.iter().enumerate().map(|(h, &v)| v * zeta[(d + h, a)]).sum();
            }
        }
        for n in 0..data.n() {
            for t in 0..data.t() {
                let r = data.row(n, t);
                let x = data.x_row(n, t);
                for a in 0..k {
                    self.cov_mean[r * k + a] =
                        x.iter().enumerate().map(|(i, &v)| v * zeta[(i, a)]).sum();
                }
            }
        }
    }

    /// Row-wise mean `W_n^t ζ̃` of the expanded latent normal.
    pub fn structural_mean_row(&self, spec: &ModelSpec, data: &Dataset, n: usize, t: usize) -> Vec<f64> {
        let k = spec.k();
        let r = data.row(n, t);
        let mut m = self.cov_mean[r * k..(r + 1) * k].to_vec();
        if t > 0 {
            let prev = self.state_idx[r - 1];
            for (a, v) in m.iter_mut().enumerate() {
                *v += self.trans_mean[prev * k + a];
            }
        }
        m
    }

    pub fn state_index(&self, row: usize) -> usize {
        self.state_idx[row]
    }

    /// Share of all (n, t) rows in each latent state.
    pub fn class_frequencies(&self, states: usize) -> Vec<f64> {
        let mut freq = vec![0.0; states];
        for &c in &self.state_idx {
            freq[c] += 1.0;
        }
        let total = self.state_idx.len() as f64;
        freq.iter_mut().for_each(|f| *f /= total);
        freq
    }

    /// Describes the first violated invariant, if any.
    pub fn invariant_violation(
        &self,
        spec: &ModelSpec,
        data: &Dataset,
        constraints: &MonotoneConstraints,
    ) -> Option<String> {
        if let Err(e) = self.meas.validate(spec) {
            return Some(e.to_string());
        }
        for j in 0..spec.items() {
            if !constraints.satisfied(self.meas.beta.column(j).as_slice()) {
                return Some(format!("item {} coefficients leave the monotone region", j + 1));
            }
        }
        let jj = spec.items();
        for (idx, (&y, &ys)) in self.y.iter().zip(&self.y_star).enumerate() {
            let j = idx % jj;
            if y == MISSING {
                return Some(format!("unimputed response at row {}", idx / jj));
            }
            let kap = &self.meas.kappa[j];
            if !(ys > kap[y as usize] && ys <= kap[y as usize + 1]) {
                return Some(format!("augmented response outside its window at cell {idx}"));
            }
        }
        for r in 0..data.n() * data.t() {
            if data.mask()[r] {
                continue;
            }
            let obs = data.y_row(r / data.t(), r % data.t());
            if obs != &self.y[r * jj..(r + 1) * jj] {
                return Some(format!("observed responses altered at row {r}"));
            }
        }
        let k = spec.k();
        let gamma = &self.expanded.gamma_t;
        for a in 0..k {
            let row: Vec<f64> = gamma.row(a).iter().copied().collect();
            if row.windows(2).any(|w| !(w[0] < w[1])) || row[1] != 0.0 {
                return Some(format!("thresholds of attribute {} out of order", a + 1));
            }
        }
        for r in 0..self.state_idx.len() {
            let alpha = &self.latents.alpha[r * k..(r + 1) * k];
            for a in 0..k {
                let l = alpha[a] as usize;
                let v = self.expanded.alpha_star_t[(r, a)];
                if !(v > gamma[(a, l)] && v <= gamma[(a, l + 1)]) {
                    return Some(format!("latent normal outside its window at row {r}, attribute {}", a + 1));
                }
            }
        }
        if !self.expanded.sigma.is_positive_definite() {
            return Some("Sigma lost positive definiteness".into());
        }
        None
    }
}

/// Starting values of the expanded covariance and coefficients.
pub(crate) fn initial_expanded(spec: &ModelSpec, rows: usize) -> ExpandedParams {
    let (k, l) = (spec.k(), spec.l());
    let mut gamma = DMatrix::zeros(k, l + 1);
    for a in 0..k {
        gamma[(a, 0)] = f64::NEG_INFINITY;
        gamma[(a, l)] = f64::INFINITY;
        for lev in 2..l {
            gamma[(a, lev)] = 2.0 * (lev - 1) as f64 / (l - 2) as f64;
        }
    }
    ExpandedParams {
        sigma: SymMatrix::identity(k),
        gamma_t: gamma,
        zeta_t: DMatrix::zeros(spec.covariates() + spec.h_otr(), k),
        alpha_star_t: DMatrix::zeros(rows, k),
    }
}

/// Fills masked rows: the first wave copies the next observed row, later
/// waves copy the row before them. Respondents with no observed row get
/// category 0 everywhere.
pub(crate) fn impute_initial(data: &Dataset) -> Vec<u16> {
    let (tt, jj) = (data.t(), data.j());
    let mut y = data.responses().to_vec();
    for n in 0..data.n() {
        for t in 0..tt {
            if !data.is_masked(n, t) {
                continue;
            }
            let source = if t == 0 {
                (1..tt).find(|&s| !data.is_masked(n, s))
            } else {
                Some(t - 1)
            };
            let dst = data.row(n, t) * jj;
            match source {
                Some(s) => {
                    let src = data.row(n, s) * jj;
                    y.copy_within(src..src + jj, dst);
                }
                None => y[dst..dst + jj].fill(0),
            }
        }
    }
    y
}
