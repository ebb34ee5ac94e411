pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod simulation;

pub use error::{Error, Result};
pub use rng::RngStream;

/// Crate version, written into every chain file and run manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
