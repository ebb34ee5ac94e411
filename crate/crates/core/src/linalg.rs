//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Relative singular-value tolerance used for every numeric rank decision.
pub const RANK_RTOL: f64 = 1e-8;

/// Symmetric matrix. Construction checks symmetry; positive definiteness is
/// checked by the operations that need it (Cholesky failure means non-PD).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "symmetric matrix",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let scale = m.amax().max(1.0);
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::invalid(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        // exact symmetry downstream
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Equicorrelation matrix with unit diagonal and `rho` elsewhere.
    pub fn equicorrelation(dim: usize, rho: f64) -> Self {
        Self(DMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { rho }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn cholesky(&self, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.0.clone()).ok_or(Error::NotPositiveDefinite(what))
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.0.clone()).is_some()
    }

    /// True when the diagonal is one to within `tol`.
    pub fn has_unit_diagonal(&self, tol: f64) -> bool {
        (0..self.dim()).all(|i| (self.0[(i, i)] - 1.0).abs() <= tol)
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Numeric rank: number of singular values above `RANK_RTOL * s_max`.
pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * smax).count()
}
