//! Synthetic studies: scenario definition, parameter and data generation,
//! missingness, label alignment and recovery scoring.

mod align;
mod generate;
mod recovery;
mod scenario;
mod study;

pub use align::{align_labels, permute_estimate};
pub use generate::{
    apply_missingness, generate_covariates, generate_data, generate_from, generate_params,
    generate_wave, min_adjacent_separation, ParamSet,
};
pub use recovery::{recovery_metrics, PointEstimate, RecoveryReport};
pub use scenario::{item_sets, ItemSet, ScenarioSpec};
pub use study::{run_replication, run_study, study_truth, Replication, StudyResult};
