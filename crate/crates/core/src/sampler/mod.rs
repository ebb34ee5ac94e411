//! Parameter-expanded Metropolis-within-Gibbs sampler.

mod chain;
mod config;
mod state;
mod steps;

pub use chain::{
    run_chain, run_chain_observed, to_original_scale, Chain, ChainMeta, Draw, COLUMN_CONVENTION,
    SWEEP_ORDER,
};
pub use config::ChainConfig;
pub use state::ChainState;
pub use steps::{Sampler, SlabConditional};
