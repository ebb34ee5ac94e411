use nalgebra::DMatrix;

use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Item parameters of the cumulative probit measurement model.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementParams {
    /// H×J coefficients; column j belongs to item j.
    pub beta: DMatrix<f64>,
    /// Per item, the M_j + 1 thresholds `(−∞, 0, κ_2, …, +∞)`.
    pub kappa: Vec<Vec<f64>>,
    /// H×J activation indicators.
    pub delta: DMatrix<u8>,
    pub omega: f64,
}

impl MeasurementParams {
    /// β = 0, only intercepts active, κ spaced one unit apart.
    pub fn zeros(spec: &ModelSpec) -> Self {
        let (h, j) = (spec.h(), spec.items());
        let mut delta = DMatrix::zeros(h, j);
        delta.row_mut(0).fill(1);
        Self {
            beta: DMatrix::zeros(h, j),
            kappa: spec
                .categories()
                .iter()
                .map(|&m| default_thresholds(m, 1.0))
                .collect(),
            delta,
            omega: 0.5,
        }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let (h, j) = (spec.h(), spec.items());
        check_shape("beta", &self.beta, h, j)?;
        if self.delta.nrows() != h || self.delta.ncols() != j {
            return Err(Error::DimensionMismatch {
                context: "delta",
                expected: h * j,
                found: self.delta.len(),
            });
        }
        if self.kappa.len() != j {
            return Err(Error::DimensionMismatch {
                context: "kappa",
                expected: j,
                found: self.kappa.len(),
            });
        }
        for (item, (kap, &m)) in self.kappa.iter().zip(spec.categories()).enumerate() {
            check_thresholds(kap, m).map_err(|e| {
                Error::invalid(format!("item {}: {e}", item + 1))
            })?;
        }
        for c in 0..j {
            if self.delta[(0, c)] != 1 {
                return Err(Error::invalid(format!("intercept of item {} inactive", c + 1)));
            }
            for r in 0..h {
                match self.delta[(r, c)] {
                    0 if self.beta[(r, c)] != 0.0 => {
                        return Err(Error::invalid(format!(
                            "beta[{r},{c}] nonzero with delta 0"
                        )))
                    }
                    0 | 1 => {}
                    v => return Err(Error::invalid(format!("delta[{r},{c}] = {v}"))),
                }
            }
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::invalid(format!("omega {} outside [0, 1]", self.omega)));
        }
        Ok(())
    }

    /// Linear predictor `d_c · β_j` for latent state `c`.
    #[inline]
    pub fn eta(&self, spec: &ModelSpec, c: usize, j: usize) -> f64 {
        dot(spec.meas_row(c), self.beta.column(j).as_slice())
    }
}

/// Original-scale structural parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralParams {
    /// K×(L+1) thresholds; row k is `(−∞, 0, γ_k2, …, +∞)`.
    pub gamma: DMatrix<f64>,
    /// D×K covariate slopes.
    pub lambda: DMatrix<f64>,
    /// H_otr×K autoregressive coefficients.
    pub xi: DMatrix<f64>,
    pub r: SymMatrix,
}

impl StructuralParams {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let (k, l) = (spec.k(), spec.l());
        check_shape("gamma", &self.gamma, k, l + 1)?;
        check_shape("lambda", &self.lambda, spec.covariates(), k)?;
        check_shape("xi", &self.xi, spec.h_otr(), k)?;
        for a in 0..k {
            let row: Vec<f64> = self.gamma.row(a).iter().copied().collect();
            check_thresholds(&row, l)
                .map_err(|e| Error::invalid(format!("attribute {}: {e}", a + 1)))?;
        }
        if self.r.dim() != k {
            return Err(Error::DimensionMismatch {
                context: "R",
                expected: k,
                found: self.r.dim(),
            });
        }
        if !self.r.has_unit_diagonal(1e-10) {
            return Err(Error::invalid("R must have a unit diagonal"));
        }
        self.r.cholesky("R")?;
        Ok(())
    }

    /// ζ = (λ; ξ), (D + H_otr)×K.
    pub fn zeta(&self) -> DMatrix<f64> {
        stack_rows(&self.lambda, &self.xi)
    }
}

/// Parameter-expanded twin of [`StructuralParams`] plus the latent
/// continuous attributes on the expanded scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedParams {
    pub sigma: SymMatrix,
    /// K×(L+1).
    pub gamma_t: DMatrix<f64>,
    /// (D + H_otr)×K.
    pub zeta_t: DMatrix<f64>,
    /// (N·T)×K, rows ordered respondent-major.
    pub alpha_star_t: DMatrix<f64>,
}

impl ExpandedParams {
    /// Diagonal of Σ.
    pub fn v(&self) -> Vec<f64> {
        (0..self.sigma.dim()).map(|i| self.sigma[(i, i)]).collect()
    }

    /// Expanded twin of original-scale values under scale `v`.
    pub fn from_original(
        theta: &StructuralParams,
        alpha_star: &DMatrix<f64>,
        v: &[f64],
    ) -> Result<Self> {
        let k = theta.r.dim();
        if v.len() != k || v.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::invalid("scale vector must be K positive reals"));
        }
        let root: Vec<f64> = v.iter().map(|x| x.sqrt()).collect();
        let sigma = DMatrix::from_fn(k, k, |i, j| root[i] * theta.r[(i, j)] * root[j]);
        Ok(Self {
            sigma: SymMatrix::new(sigma)?,
            gamma_t: scale_rows(&theta.gamma, &root),
            zeta_t: scale_columns(&theta.zeta(), &root),
            alpha_star_t: scale_columns(alpha_star, &root),
        })
    }

    /// Inverse transform: returns original-scale structural parameters and α*.
    pub fn to_original(&self, spec: &ModelSpec) -> Result<(StructuralParams, DMatrix<f64>)> {
        self.sigma.cholesky("Sigma")?;
        let k = self.sigma.dim();
        let inv_root: Vec<f64> = self.v().iter().map(|x| 1.0 / x.sqrt()).collect();
        let mut r = DMatrix::from_fn(k, k, |i, j| {
            inv_root[i] * self.sigma[(i, j)] * inv_root[j]
        });
        for i in 0..k {
            r[(i, i)] = 1.0;
        }
        let zeta = scale_columns(&self.zeta_t, &inv_root);
        let d = spec.covariates();
        let theta = StructuralParams {
            gamma: scale_rows(&self.gamma_t, &inv_root),
            lambda: zeta.rows(0, d).into_owned(),
            xi: zeta.rows(d, zeta.nrows() - d).into_owned(),
            r: SymMatrix::new(r)?,
        };
        Ok((theta, scale_columns(&self.alpha_star_t, &inv_root)))
    }
}

/// Thresholds `(−∞, 0, step, 2·step, …, +∞)` for `m` categories.
pub fn default_thresholds(m: usize, step: f64) -> Vec<f64> {
    let mut t = Vec::with_capacity(m + 1);
    t.push(f64::NEG_INFINITY);
    for i in 1..m {
        t.push((i - 1) as f64 * step);
    }
    t.push(f64::INFINITY);
    t
}

fn check_thresholds(t: &[f64], m: usize) -> Result<()> {
    if t.len() != m + 1 {
        return Err(Error::DimensionMismatch {
            context: "thresholds",
            expected: m + 1,
            found: t.len(),
        });
    }
    if t[0] != f64::NEG_INFINITY || t[m] != f64::INFINITY || t[1] != 0.0 {
        return Err(Error::invalid("thresholds must read (−inf, 0, …, +inf)"));
    }
    if t.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("thresholds not strictly increasing"));
    }
    Ok(())
}

fn check_shape(what: &'static str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: rows * cols,
            found: m.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = top.ncols().max(bottom.ncols());
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), cols);
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

fn scale_columns(m: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, &f) in s.iter().enumerate() {
        out.column_mut(j).scale_mut(f);
    }
    out
}

fn scale_rows(m: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, &f) in s.iter().enumerate() {
        out.row_mut(i).scale_mut(f);
    }
    out
}
