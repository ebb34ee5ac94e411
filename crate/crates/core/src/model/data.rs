use crate::error::{Error, Result};

/// Sentinel for a missing response.
pub const MISSING: u16 = u16::MAX;

/// Panel of ordinal responses and covariates.
///
/// Arrays are flattened respondent-major: response `(n, t, j)` lives at
/// `(n·T + t)·J + j`, covariate `(n, t, d)` at `(n·T + t)·D + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    t: usize,
    categories: Vec<usize>,
    d: usize,
    y: Vec<u16>,
    x: Vec<f64>,
    mask: Vec<bool>,
}

impl Dataset {
    /// Validates bounds and derives the mask. A row must be either fully
    /// observed or fully missing.
    pub fn new(
        n: usize,
        t: usize,
        categories: Vec<usize>,
        d: usize,
        y: Vec<u16>,
        x: Vec<f64>,
    ) -> Result<Self> {
        let j = categories.len();
        if n == 0 || t == 0 || j == 0 {
            return Err(Error::invalid("dataset needs N, T and J all positive"));
        }
        if y.len() != n * t * j {
            return Err(Error::DimensionMismatch {
                context: "responses",
                expected: n * t * j,
                found: y.len(),
            });
        }
        if x.len() != n * t * d {
            return Err(Error::DimensionMismatch {
                context: "covariates",
                expected: n * t * d,
                found: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            let row = pos / d.max(1);
            return Err(Error::invalid(format!(
                "non-finite covariate for respondent {}, time {}",
                row / t + 1,
                row % t + 1
            )));
        }
        let mut mask = vec![false; n * t];
        for (row, cells) in y.chunks(j).enumerate() {
            let missing = cells.iter().filter(|&&v| v == MISSING).count();
            if missing == j {
                mask[row] = true;
            } else if missing > 0 {
                return Err(Error::invalid(format!(
                    "respondent {}, time {}: partially missing response row",
                    row / t + 1,
                    row % t + 1
                )));
            }
            for (item, &v) in cells.iter().enumerate() {
                if v != MISSING && v as usize >= categories[item] {
                    return Err(Error::invalid(format!(
                        "respondent {}, time {}, item {}: category {} outside 0..{}",
                        row / t + 1,
                        row % t + 1,
                        item + 1,
                        v,
                        categories[item]
                    )));
                }
            }
        }
        Ok(Self {
            n,
            t,
            categories,
            d,
            y,
            x,
            mask,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn j(&self) -> usize {
        self.categories.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn categories(&self) -> &[usize] {
        &self.categories
    }

    #[inline]
    pub fn row(&self, n: usize, t: usize) -> usize {
        n * self.t + t
    }

    /// Raw responses of row `(n, t)`, `MISSING` where masked.
    #[inline]
    pub fn y_row(&self, n: usize, t: usize) -> &[u16] {
        let j = self.j();
        let r = self.row(n, t);
        &self.y[r * j..(r + 1) * j]
    }

    pub fn y(&self, n: usize, t: usize, j: usize) -> Option<usize> {
        let v = self.y_row(n, t)[j];
        (v != MISSING).then_some(v as usize)
    }

    #[inline]
    pub fn x_row(&self, n: usize, t: usize) -> &[f64] {
        let r = self.row(n, t);
        &self.x[r * self.d..(r + 1) * self.d]
    }

    #[inline]
    pub fn is_masked(&self, n: usize, t: usize) -> bool {
        self.mask[self.row(n, t)]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn responses(&self) -> &[u16] {
        &self.y
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn masked_rows(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Copy with the given `(n, t)` rows blanked out. Covariates are untouched.
    pub fn with_mask(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.mask.len() {
            return Err(Error::DimensionMismatch {
                context: "mask",
                expected: self.mask.len(),
                found: mask.len(),
            });
        }
        let j = self.j();
        let mut out = self.clone();
        for (row, &m) in mask.iter().enumerate() {
            if m {
                out.y[row * j..(row + 1) * j].fill(MISSING);
                out.mask[row] = true;
            }
        }
        Ok(out)
    }
}

/// Discrete latent profiles, N×T×K flattened respondent-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Latents {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub alpha: Vec<u8>,
}

impl Latents {
    pub fn zeros(n: usize, t: usize, k: usize) -> Self {
        Self {
            n,
            t,
            k,
            alpha: vec![0; n * t * k],
        }
    }

    #[inline]
    pub fn get(&self, n: usize, t: usize) -> &[u8] {
        let r = n * self.t + t;
        &self.alpha[r * self.k..(r + 1) * self.k]
    }

    #[inline]
    pub fn get_mut(&mut self, n: usize, t: usize) -> &mut [u8] {
        let r = n * self.t + t;
        &mut self.alpha[r * self.k..(r + 1) * self.k]
    }
}
