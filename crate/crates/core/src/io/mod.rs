//! File formats: long-format response and covariate tables, and chain files.

mod chain_file;
mod dataset;

pub use chain_file::{load_chain, read_chain, save_chain, write_chain, CHAIN_FORMAT};
pub use dataset::{load_dataset, save_dataset, NA};
