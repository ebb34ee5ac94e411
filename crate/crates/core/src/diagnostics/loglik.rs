use crate::dist::log_norm_interval;
use crate::model::{Dataset, Latents, MeasurementParams, ModelSpec, MISSING};

/// log p(y_n | θ_m, α_n) for one respondent.
///
/// `y_n` holds T×J responses row-major with `MISSING` rows skipped;
/// `alpha_n` holds T×K attribute levels.
pub fn conditional_loglik(
    y_n: &[u16],
    alpha_n: &[u8],
    theta: &MeasurementParams,
    spec: &ModelSpec,
) -> f64 {
    let (jj, kk) = (spec.items(), spec.k());
    let waves = y_n.len() / jj;
    let mut total = 0.0;
    for t in 0..waves {
        let c = spec.state_of(&alpha_n[t * kk..(t + 1) * kk]);
        for j in 0..jj {
            let y = y_n[t * jj + j];
            if y == MISSING {
                continue;
            }
            let eta = theta.eta(spec, c, j);
            let kap = &theta.kappa[j];
            total += log_norm_interval(kap[y as usize] - eta, kap[y as usize + 1] - eta);
        }
    }
    if total == f64::NEG_INFINITY {
        log::warn!("response with zero probability under the current draw");
    }
    total
}

/// Per-respondent conditional log-likelihoods for a whole dataset, using a
/// table of log category probabilities per latent state.
pub fn loglik_rows(
    data: &Dataset,
    spec: &ModelSpec,
    theta: &MeasurementParams,
    latents: &Latents,
) -> Vec<f64> {
    let jj = spec.items();
    let offsets: Vec<usize> = spec
        .categories()
        .iter()
        .scan(0, |acc, &m| {
            let o = *acc;
            *acc += m;
            Some(o)
        })
        .collect();
    let width: usize = spec.categories().iter().sum();
    let mut table = vec![0.0; spec.states() * width];
    for c in 0..spec.states() {
        for j in 0..jj {
            let eta = theta.eta(spec, c, j);
            let kap = &theta.kappa[j];
            for m in 0..spec.categories()[j] {
                table[c * width + offsets[j] + m] = log_norm_interval(kap[m] - eta, kap[m + 1] - eta);
            }
        }
    }
    let mut out = vec![0.0; data.n()];
    for (n, slot) in out.iter_mut().enumerate() {
        for t in 0..data.t() {
            if data.is_masked(n, t) {
                continue;
            }
            let c = spec.state_of(latents.get(n, t));
            let row = &table[c * width..(c + 1) * width];
            *slot += data
                .y_row(n, t)
                .iter()
                .enumerate()
                .map(|(j, &y)| row[offsets[j] + y as usize])
                .sum::<f64>();
        }
    }
    out
}
