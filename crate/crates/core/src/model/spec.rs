use crate::error::{Error, Result};

/// Attribute levels of one respondent at one time point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeProfile(pub Vec<u8>);

impl AttributeProfile {
    pub fn new(values: Vec<u8>) -> Self {
        Self(values)
    }

    /// Profile with lexicographic state index `state` (attribute 1 most significant).
    pub fn from_state(state: usize, k: usize, l: usize) -> Self {
        let mut values = vec![0u8; k];
        let mut rest = state;
        for slot in values.iter_mut().rev() {
            *slot = (rest % l) as u8;
            rest /= l;
        }
        Self(values)
    }

    pub fn state_index(&self, l: usize) -> usize {
        self.0.iter().fold(0, |acc, &a| acc * l + a as usize)
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    /// Componentwise `self >= other`.
    pub fn dominates(&self, other: &AttributeProfile) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    fn check(&self, k: usize, l: usize) -> Result<()> {
        if self.0.len() != k {
            return Err(Error::DimensionMismatch {
                context: "attribute profile",
                expected: k,
                found: self.0.len(),
            });
        }
        if let Some(bad) = self.0.iter().find(|&&a| a as usize >= l) {
            return Err(Error::invalid(format!(
                "attribute level {bad} outside 0..{l}"
            )));
        }
        Ok(())
    }
}

/// Columns of an order-reduced cumulative design.
///
/// Each column is a multi-index `(i_1, …, i_K)` into the Kronecker product
/// `d_1 ⊗ … ⊗ d_K` with `d_k = (I(α_k ≥ 0), …, I(α_k ≥ L−1))`. Columns are kept
/// in lexicographic multi-index order, attribute 1 most significant, and only
/// those with at most `order` nonzero positions survive. Column 0 is the
/// intercept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignBasis {
    attrs: usize,
    levels: usize,
    order: usize,
    columns: Vec<Vec<u8>>,
}

impl DesignBasis {
    pub fn new(attrs: usize, levels: usize, order: usize) -> Result<Self> {
        if attrs == 0 || levels < 2 {
            return Err(Error::invalid("design needs K >= 1 and L >= 2"));
        }
        if order == 0 || order > attrs {
            return Err(Error::invalid(format!(
                "interaction order {order} outside 1..={attrs}"
            )));
        }
        let total = levels.pow(attrs as u32);
        let columns = (0..total)
            .map(|c| AttributeProfile::from_state(c, attrs, levels).0)
            .filter(|idx| idx.iter().filter(|&&i| i > 0).count() <= order)
            .collect();
        Ok(Self {
            attrs,
            levels,
            order,
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn column(&self, h: usize) -> &[u8] {
        &self.columns[h]
    }

    /// Number of attributes a column involves (0 for the intercept).
    pub fn interaction_order(&self, h: usize) -> usize {
        self.columns[h].iter().filter(|&&i| i > 0).count()
    }

    /// Column of the main effect `I(α_k ≥ level)`.
    pub fn main_effect(&self, k: usize, level: usize) -> Option<usize> {
        self.columns.iter().position(|c| {
            c.iter()
                .enumerate()
                .all(|(i, &v)| if i == k { v as usize == level } else { v == 0 })
        })
    }

    /// Human-readable column name, e.g. `a1>=1:a2>=1`.
    pub fn label(&self, h: usize) -> String {
        let parts: Vec<String> = self.columns[h]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(k, v)| format!("a{}>={}", k + 1, v))
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(":")
        }
    }

    /// Writes the 0/1 design row of `alpha` into `out`.
    pub fn encode_into(&self, alpha: &[u8], out: &mut [f64]) {
        for (slot, col) in out.iter_mut().zip(&self.columns) {
            let on = col.iter().zip(alpha).all(|(&i, &a)| a >= i);
            *slot = if on { 1.0 } else { 0.0 };
        }
    }

    pub fn encode(&self, alpha: &[u8]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.encode_into(alpha, &mut out);
        out
    }

    /// Row-major table of design rows for every latent state.
    fn state_table(&self) -> Vec<f64> {
        let states = self.levels.pow(self.attrs as u32);
        let mut table = vec![0.0; states * self.len()];
        for (c, row) in table.chunks_mut(self.len()).enumerate() {
            let alpha = AttributeProfile::from_state(c, self.attrs, self.levels);
            self.encode_into(&alpha.0, row);
        }
        table
    }
}

/// Dimensions and orders of a fitted or simulated model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    k: usize,
    l: usize,
    categories: Vec<usize>,
    covariates: usize,
    meas: DesignBasis,
    trans: DesignBasis,
    meas_table: Vec<f64>,
    trans_table: Vec<f64>,
}

impl ModelSpec {
    pub fn new(
        k: usize,
        l: usize,
        categories: Vec<usize>,
        meas_order: usize,
        trans_order: usize,
        covariates: usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if l < 2 {
            return Err(Error::invalid("L must be at least 2"));
        }
        if categories.is_empty() {
            return Err(Error::invalid("model needs at least one item"));
        }
        if let Some(j) = categories.iter().position(|&m| m < 2) {
            return Err(Error::invalid(format!(
                "item {} has {} categories; at least 2 required",
                j + 1,
                categories[j]
            )));
        }
        if categories.iter().any(|&m| m > u16::MAX as usize - 1) {
            return Err(Error::invalid("too many response categories"));
        }
        let meas = DesignBasis::new(k, l, meas_order)?;
        let trans = DesignBasis::new(k, l, trans_order)?;
        Ok(Self {
            k,
            l,
            categories,
            covariates,
            meas_table: meas.state_table(),
            trans_table: trans.state_table(),
            meas,
            trans,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn items(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[usize] {
        &self.categories
    }

    pub fn covariates(&self) -> usize {
        self.covariates
    }

    pub fn meas_order(&self) -> usize {
        self.meas.order()
    }

    pub fn trans_order(&self) -> usize {
        self.trans.order()
    }

    /// Number of latent states `L^K`.
    pub fn states(&self) -> usize {
        self.l.pow(self.k as u32)
    }

    /// Columns of the measurement design (H).
    pub fn h(&self) -> usize {
        self.meas.len()
    }

    /// Columns of the transition design (H_otr).
    pub fn h_otr(&self) -> usize {
        self.trans.len()
    }

    pub fn meas_basis(&self) -> &DesignBasis {
        &self.meas
    }

    pub fn trans_basis(&self) -> &DesignBasis {
        &self.trans
    }

    /// Measurement design row of latent state `c`.
    #[inline]
    pub fn meas_row(&self, c: usize) -> &[f64] {
        let h = self.h();
        &self.meas_table[c * h..(c + 1) * h]
    }

    /// Transition design row of latent state `c`.
    #[inline]
    pub fn trans_row(&self, c: usize) -> &[f64] {
        let h = self.h_otr();
        &self.trans_table[c * h..(c + 1) * h]
    }

    pub fn profile(&self, c: usize) -> AttributeProfile {
        AttributeProfile::from_state(c, self.k, self.l)
    }

    #[inline]
    pub fn state_of(&self, alpha: &[u8]) -> usize {
        alpha.iter().fold(0, |acc, &a| acc * self.l + a as usize)
    }

    pub fn check_profile(&self, alpha: &AttributeProfile) -> Result<()> {
        alpha.check(self.k, self.l)
    }

    /// Same spec with a different item set.
    pub fn with_categories(&self, categories: Vec<usize>) -> Result<Self> {
        Self::new(
            self.k,
            self.l,
            categories,
            self.meas_order(),
            self.trans_order(),
            self.covariates,
        )
    }
}

/// Reduced cumulative design vector of `alpha` at interaction order `order`.
pub fn design_vector(alpha: &AttributeProfile, spec: &ModelSpec, order: usize) -> Result<Vec<u8>> {
    spec.check_profile(alpha)?;
    let basis = DesignBasis::new(spec.k(), spec.l(), order)?;
    Ok(basis.encode(&alpha.0).into_iter().map(|v| v as u8).collect())
}

/// Closed-form column count `Σ_{r ≤ order} C(K, r) (L−1)^r`.
pub fn design_width(k: usize, l: usize, order: usize) -> usize {
    let mut total = 0;
    let mut binom = 1usize;
    for r in 0..=order.min(k) {
        total += binom * (l - 1).pow(r as u32);
        binom = binom * (k - r) / (r + 1);
    }
    total
}
