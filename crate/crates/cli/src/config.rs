use std::path::{Path, PathBuf};

use rlcm_core::sampler::ChainConfig;
use rlcm_core::simulation::ScenarioSpec;
use serde::{Deserialize, Serialize};

/// Contents of a `--config` file. Each command reads the sections it needs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub chain: ChainConfig,
    pub scenario: Option<ScenarioSpec>,
    pub diagnose: Option<DiagnoseConfig>,
    pub waic: Option<WaicConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub k: usize,
    pub l: usize,
    /// Categories per item.
    pub categories: Vec<usize>,
    /// Highest interaction order in the measurement design; `min(K, 2)`
    /// when absent.
    pub meas_order: Option<usize>,
    #[serde(default = "one")]
    pub trans_order: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub responses: PathBuf,
    pub covariates: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub chain: PathBuf,
    #[serde(default = "frac_a")]
    pub frac_a: f64,
    #[serde(default = "frac_b")]
    pub frac_b: f64,
    #[serde(default = "level")]
    pub level: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaicConfig {
    pub chains: Vec<PathBuf>,
}

fn one() -> usize {
    1
}
fn frac_a() -> f64 {
    0.1
}
fn frac_b() -> f64 {
    0.5
}
fn level() -> f64 {
    0.95
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Makes relative paths relative to the directory of the config file.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            fix(&mut d.responses);
            if let Some(x) = &mut d.covariates {
                fix(x);
            }
        }
        if let Some(d) = &mut self.diagnose {
            fix(&mut d.chain);
        }
        if let Some(w) = &mut self.waic {
            w.chains.iter_mut().for_each(fix);
        }
    }

    /// Every input path named in the config, for up-front validation.
    pub fn input_paths(&self) -> Vec<&Path> {
        let mut out = Vec::new();
        if let Some(d) = &self.data {
            out.push(d.responses.as_path());
            if let Some(x) = &d.covariates {
                out.push(x.as_path());
            }
        }
        if let Some(d) = &self.diagnose {
            out.push(d.chain.as_path());
        }
        if let Some(w) = &self.waic {
            out.extend(w.chains.iter().map(PathBuf::as_path));
        }
        out
    }
}
