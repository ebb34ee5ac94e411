use rayon::prelude::*;

use super::align::{align_labels, permute_estimate};
use super::generate::{apply_missingness, generate_data, generate_params, ParamSet};
use super::recovery::{recovery_metrics, PointEstimate, RecoveryReport};
use super::scenario::ScenarioSpec;
use crate::diagnostics::summarize_chain;
use crate::error::Result;
use crate::rng::RngStream;
use crate::sampler::{run_chain, ChainConfig};

/// Outcome of one simulated replication.
#[derive(Debug, Clone)]
pub struct Replication {
    pub index: usize,
    /// Estimate after label alignment.
    pub estimate: PointEstimate,
    pub permutation: Vec<usize>,
    pub kappa_acceptance: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub truth: ParamSet,
    pub replications: Vec<Replication>,
    pub report: RecoveryReport,
}

/// Generating parameters shared by every replication of a scenario.
pub fn study_truth(scenario: &ScenarioSpec) -> Result<ParamSet> {
    generate_params(scenario, &mut RngStream::new(scenario.seed, 0))
}

/// Simulates, fits and aligns replication `index`. Data come from stream
/// `2·index + 1` of the scenario seed and the chain from stream
/// `2·index + 2`, so replications are independent of scheduling.
pub fn run_replication(
    scenario: &ScenarioSpec,
    truth: &ParamSet,
    config: &ChainConfig,
    index: usize,
) -> Result<Replication> {
    let start = std::time::Instant::now();
    let spec = scenario.model_spec()?;
    let mut data_rng = RngStream::new(scenario.seed, 2 * index as u64 + 1);
    let (full, _) = generate_data(truth, scenario, &mut data_rng)?;
    let data = if scenario.missing_rate > 0.0 {
        apply_missingness(&full, scenario.missing_rate, &mut data_rng)?
    } else {
        full
    };
    let mut chain_rng = RngStream::new(scenario.seed, 2 * index as u64 + 2);
    let chain = run_chain(&data, &spec, config, &mut chain_rng)?;
    let summary = summarize_chain(&chain, 0.95)?;
    let truth_pe = PointEstimate::from_params(truth, &spec);
    let permutation = align_labels(&truth_pe, &summary.estimate, &spec)?;
    let estimate = permute_estimate(&summary.estimate, &permutation, &spec);
    Ok(Replication {
        index,
        estimate,
        permutation,
        kappa_acceptance: chain.mean_kappa_acceptance(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// All replications of a scenario, run in parallel on the current rayon
/// pool, then scored together.
pub fn run_study(scenario: &ScenarioSpec, config: &ChainConfig) -> Result<StudyResult> {
    scenario.validate()?;
    let truth = study_truth(scenario)?;
    let spec = scenario.model_spec()?;
    let replications = (0..scenario.replications)
        .into_par_iter()
        .map(|r| {
            let rep = run_replication(scenario, &truth, config, r);
            if let Ok(rep) = &rep {
                log::info!("replication {} finished in {:.1}s", r + 1, rep.seconds);
            }
            rep
        })
        .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<PointEstimate> = replications.iter().map(|r| r.estimate.clone()).collect();
    let report = recovery_metrics(&PointEstimate::from_params(&truth, &spec), &estimates)?;
    Ok(StudyResult {
        truth,
        replications,
        report,
    })
}
