//! Model types and the deterministic parts of the model.

mod data;
mod identifiability;
mod measurement;
mod monotone;
mod params;
mod spec;
mod structural;

pub use data::{Dataset, Latents, MISSING};
pub use identifiability::{
    check_identifiability, design_matrices, ConditionResult, IdentifiabilityReport,
};
pub use measurement::{category_prob, emission_prob, emissions_block, emissions_matrix};
pub use monotone::{check_monotone, monotone_truncation_point, MonotoneConstraints};
pub use params::{default_thresholds, ExpandedParams, MeasurementParams, StructuralParams};
pub use spec::{design_vector, design_width, AttributeProfile, DesignBasis, ModelSpec};
pub use structural::{structural_mean, transition_matrix, transition_prob, transition_row};
