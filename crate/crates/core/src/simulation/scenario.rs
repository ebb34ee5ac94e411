use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Categories per generated item.
pub const CATEGORIES: usize = 4;
/// Covariates: standardized age and a sex indicator.
pub const COVARIATES: usize = 2;
const ITEMS_PER_SET: usize = 5;

/// One row of a simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub l: usize,
    /// Common off-diagonal correlation of R.
    pub rho: f64,
    #[serde(default)]
    pub missing_rate: f64,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

/// What a block of five items measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemSet {
    Single(usize),
    Pair(usize, usize),
}

/// Item blocks: one per attribute, then attribute pairs in lexicographic
/// order until the item count is reached.
pub fn item_sets(k: usize) -> Vec<ItemSet> {
    let total = match k {
        1 => 1,
        2 => 3,
        3 => 5,
        4 => 9,
        _ => k + k * (k - 1) / 2,
    };
    let mut sets: Vec<ItemSet> = (0..k).map(ItemSet::Single).collect();
    'outer: for a in 0..k {
        for b in a + 1..k {
            if sets.len() == total {
                break 'outer;
            }
            sets.push(ItemSet::Pair(a, b));
        }
    }
    sets
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t == 0 {
            return Err(Error::Config("N and T must be positive".into()));
        }
        if self.k == 0 || self.l < 2 {
            return Err(Error::Config("need K >= 1 and L >= 2".into()));
        }
        if !(2..=4).contains(&self.k) || !(2..=3).contains(&self.l) {
            log::warn!("K = {}, L = {} lies outside the studied grid", self.k, self.l);
        }
        let lower = if self.k > 1 { -1.0 / (self.k as f64 - 1.0) } else { -1.0 };
        if !(self.rho > lower && self.rho < 1.0) {
            return Err(Error::NotPositiveDefinite("equicorrelation R"));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::Config(format!(
                "missing_rate must lie in [0, 1), got {}",
                self.missing_rate
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        Ok(())
    }

    pub fn items(&self) -> usize {
        ITEMS_PER_SET * item_sets(self.k).len()
    }

    /// Two-way measurement interactions, main-effect transitions.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(
            self.k,
            self.l,
            vec![CATEGORIES; self.items()],
            self.k.min(2),
            1,
            COVARIATES,
        )
    }

    pub fn item_set(&self, j: usize) -> ItemSet {
        item_sets(self.k)[j / ITEMS_PER_SET]
    }
}
