use nalgebra::DMatrix;

use super::generate::ParamSet;
use crate::error::{Error, Result};
use crate::model::{emissions_matrix, ModelSpec};

/// Point estimates compared during recovery scoring; the truth is
/// represented the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub beta: DMatrix<f64>,
    pub delta: DMatrix<u8>,
    pub gamma: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Class-conditional response probabilities: rows stack items and
    /// categories, columns are latent states.
    pub eta: DMatrix<f64>,
}

impl PointEstimate {
    pub fn from_params(p: &ParamSet, spec: &ModelSpec) -> Self {
        Self {
            beta: p.meas.beta.clone(),
            delta: p.meas.delta.clone(),
            gamma: p.structural.gamma.clone(),
            lambda: p.structural.lambda.clone(),
            xi: p.structural.xi.clone(),
            r: p.structural.r.matrix().clone(),
            eta: emissions_matrix(&p.meas, spec),
        }
    }
}

/// Average recovery over replications and elements. Fields that have no
/// elements (free γ thresholds when L = 2, R when K = 1, an empty split)
/// are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryReport {
    pub gamma: f64,
    pub eta: f64,
    pub r: f64,
    pub lambda: f64,
    pub xi: f64,
    pub beta: f64,
    pub delta: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub replications: usize,
}

impl RecoveryReport {
    pub const COLUMNS: [&'static str; 11] = [
        "gamma", "eta", "R", "lambda", "xi", "beta", "delta", "delta0", "delta1", "beta0", "beta1",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.gamma,
            self.eta,
            self.r,
            self.lambda,
            self.xi,
            self.beta,
            self.delta,
            self.delta0,
            self.delta1,
            self.beta0,
            self.beta1,
        ]
    }
}

#[derive(Default)]
struct Mean {
    sum: f64,
    count: usize,
}

impl Mean {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
    }

    fn get(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }
}

fn check(name: &'static str, a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            context: name,
            expected: a.0 * a.1,
            found: b.0 * b.1,
        });
    }
    Ok(())
}

fn add_abs(acc: &mut Mean, t: &DMatrix<f64>, e: &DMatrix<f64>) {
    for (a, b) in t.iter().zip(e.iter()) {
        acc.add((a - b).abs());
    }
}

/// Scores already-aligned estimates against the truth.
///
/// Every element appears once per replication, so averaging over
/// replications and then over elements is a plain mean over both.
pub fn recovery_metrics(truth: &PointEstimate, estimates: &[PointEstimate]) -> Result<RecoveryReport> {
    if estimates.is_empty() {
        return Err(Error::invalid("recovery needs at least one replication"));
    }
    let mut m: [Mean; 11] = Default::default();
    for est in estimates {
        check("beta", truth.beta.shape(), est.beta.shape())?;
        check("delta", truth.delta.shape(), est.delta.shape())?;
        check("gamma", truth.gamma.shape(), est.gamma.shape())?;
        check("lambda", truth.lambda.shape(), est.lambda.shape())?;
        check("xi", truth.xi.shape(), est.xi.shape())?;
        check("R", truth.r.shape(), est.r.shape())?;
        check("eta", truth.eta.shape(), est.eta.shape())?;

        let l = truth.gamma.ncols() - 1;
        for k in 0..truth.gamma.nrows() {
            for lev in 2..l {
                m[0].add((truth.gamma[(k, lev)] - est.gamma[(k, lev)]).abs());
            }
        }
        add_abs(&mut m[1], &truth.eta, &est.eta);
        for b in 0..truth.r.ncols() {
            for a in 0..b {
                m[2].add((truth.r[(a, b)] - est.r[(a, b)]).abs());
            }
        }
        add_abs(&mut m[3], &truth.lambda, &est.lambda);
        add_abs(&mut m[4], &truth.xi, &est.xi);
        add_abs(&mut m[5], &truth.beta, &est.beta);
        for ((&dt, &de), (&bt, &be)) in truth
            .delta
            .iter()
            .zip(est.delta.iter())
            .zip(truth.beta.iter().zip(est.beta.iter()))
        {
            let ce = if dt == de { 1.0 } else { 0.0 };
            m[6].add(ce);
            let (d_slot, b_slot) = if dt == 0 { (7, 9) } else { (8, 10) };
            m[d_slot].add(ce);
            m[b_slot].add((bt - be).abs());
        }
    }
    Ok(RecoveryReport {
        gamma: m[0].get(),
        eta: m[1].get(),
        r: m[2].get(),
        lambda: m[3].get(),
        xi: m[4].get(),
        beta: m[5].get(),
        delta: m[6].get(),
        delta0: m[7].get(),
        delta1: m[8].get(),
        beta0: m[9].get(),
        beta1: m[10].get(),
        replications: estimates.len(),
    })
}
