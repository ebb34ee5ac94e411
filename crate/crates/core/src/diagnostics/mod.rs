//! Log-likelihoods, WAIC, convergence diagnostics and posterior summaries.

mod convergence;
mod loglik;
mod summary;
mod waic;

pub use convergence::{autocovariance, ess, geweke_z, iact, spectral_density_zero};
pub use loglik::{conditional_loglik, loglik_rows};
pub use summary::{
    chain_series, diagnose_chain, quantile_type7, summarize_chain, ChainSummary, ParamDiagnostic,
    SummaryEntry, QUANTILE_RULE,
};
pub use waic::{waic, Waic};
