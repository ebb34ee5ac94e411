use super::recovery::PointEstimate;
use crate::error::{Error, Result};
use crate::model::{DesignBasis, ModelSpec};

const MAX_ATTRIBUTES: usize = 6;

/// Relabels an estimate: attribute `k` of the result is attribute `perm[k]`
/// of `est`. Design rows, ξ rows and η columns follow the induced
/// permutation of multi-indices.
pub fn permute_estimate(est: &PointEstimate, perm: &[usize], spec: &ModelSpec) -> PointEstimate {
    let k = spec.k();
    let remap = |idx: &[u8]| -> Vec<u8> {
        let mut out = vec![0u8; k];
        for (a, &v) in idx.iter().enumerate() {
            out[perm[a]] = v;
        }
        out
    };
    let rows_of = |basis: &DesignBasis| -> Vec<usize> {
        (0..basis.len())
            .map(|h| {
                let target = remap(basis.column(h));
                (0..basis.len())
                    .position(|g| basis.column(g) == target.as_slice())
                    .expect("basis closed under relabelling")
            })
            .collect()
    };
    let meas_rows = rows_of(spec.meas_basis());
    let trans_rows = rows_of(spec.trans_basis());
    let states: Vec<usize> = (0..spec.states())
        .map(|c| spec.state_of(&remap(spec.profile(c).values())))
        .collect();

    let mut out = est.clone();
    for (h, &src) in meas_rows.iter().enumerate() {
        out.beta.set_row(h, &est.beta.row(src));
        out.delta.set_row(h, &est.delta.row(src));
    }
    for a in 0..k {
        out.gamma.set_row(a, &est.gamma.row(perm[a]));
        out.lambda.set_column(a, &est.lambda.column(perm[a]));
        for (h, &src) in trans_rows.iter().enumerate() {
            out.xi[(h, a)] = est.xi[(src, perm[a])];
        }
        for b in 0..k {
            out.r[(a, b)] = est.r[(perm[a], perm[b])];
        }
    }
    for (c, &src) in states.iter().enumerate() {
        out.eta.set_column(c, &est.eta.column(src));
    }
    out
}

fn total_abs(truth: &PointEstimate, est: &PointEstimate) -> f64 {
    let finite = |a: f64, b: f64| if a.is_finite() && b.is_finite() { (a - b).abs() } else { 0.0 };
    let pairs = [
        (&truth.beta, &est.beta),
        (&truth.gamma, &est.gamma),
        (&truth.lambda, &est.lambda),
        (&truth.xi, &est.xi),
        (&truth.r, &est.r),
    ];
    pairs
        .iter()
        .map(|(t, e)| t.iter().zip(e.iter()).map(|(&a, &b)| finite(a, b)).sum::<f64>())
        .sum()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Attribute permutation minimizing the summed absolute error of
/// (β, γ, λ, ξ, R) against the truth, by enumeration. Ties keep the
/// earliest permutation in lexicographic order, so the identity wins when
/// it is optimal.
pub fn align_labels(truth: &PointEstimate, est: &PointEstimate, spec: &ModelSpec) -> Result<Vec<usize>> {
    if spec.k() > MAX_ATTRIBUTES {
        return Err(Error::invalid(format!(
            "label alignment enumerates K! permutations; K = {} exceeds {MAX_ATTRIBUTES}",
            spec.k()
        )));
    }
    let mut best = (f64::INFINITY, Vec::new());
    for p in permutations(spec.k()) {
        let cost = total_abs(truth, &permute_estimate(est, &p, spec));
        if cost < best.0 - 1e-12 {
            best = (cost, p);
        }
    }
    Ok(best.1)
}
