use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scm::Dataset;

const MAX_ITERATIONS: usize = 50;
const STEP_TOLERANCE: f64 = 1e-10;
const MAX_ABS_LOG_HR: f64 = 50.0;

/// Marginal Cox fit with treatment as the only covariate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxFit {
    pub log_hr: f64,
    pub standard_error: f64,
    pub iterations: usize,
    /// False when Newton–Raphson did not settle, e.g. under a monotone likelihood.
    pub converged: bool,
}

impl CoxFit {
    pub fn hazard_ratio(&self) -> f64 {
        self.log_hr.exp()
    }
}

/// Risk-set summary at one distinct event time.
#[derive(Debug, Clone, Copy)]
struct EventTime {
    d: f64,
    d1: f64,
    n0: f64,
    n1: f64,
}

fn event_table(dataset: &Dataset) -> Vec<EventTime> {
    let mut recs: Vec<(f64, bool, u8)> = dataset.records.iter().map(|r| (r.t_obs, r.d, r.a)).collect();
    recs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal));
    let (mut n0, mut n1) = (0.0, 0.0);
    let mut table = Vec::new();
    let mut i = 0;
    while i < recs.len() {
        let t = recs[i].0;
        let (mut d, mut d1) = (0.0, 0.0);
        while i < recs.len() && recs[i].0 == t {
            let (_, event, a) = recs[i];
            if a == 1 {
                n1 += 1.0;
            } else {
                n0 += 1.0;
            }
            if event {
                d += 1.0;
                d1 += a as f64;
            }
            i += 1;
        }
        if d > 0.0 {
            table.push(EventTime { d, d1, n0, n1 });
        }
    }
    table
}

// Log partial likelihood (Breslow), score and information at β.
fn derivatives(table: &[EventTime], beta: f64) -> (f64, f64, f64) {
    let e = beta.exp();
    table.iter().fold((0.0, 0.0, 0.0), |(l, u, i), et| {
        let denom = et.n0 + et.n1 * e;
        let p1 = et.n1 * e / denom;
        (
            l + et.d1 * beta - et.d * denom.ln(),
            u + et.d1 - et.d * p1,
            i + et.d * p1 * (1.0 - p1),
        )
    })
}

/// Score `∂ℓ/∂β` of the partial likelihood.
pub fn cox_score(dataset: &Dataset, beta: f64) -> f64 {
    derivatives(&event_table(dataset), beta).1
}

/// Newton–Raphson with step halving on the Breslow partial likelihood.
pub fn cox_fit(dataset: &Dataset) -> Result<CoxFit> {
    for a in [0u8, 1] {
        if dataset.arm(a).next().is_none() {
            return Err(Error::EmptyArm(a));
        }
        if !dataset.arm(a).any(|r| r.d) {
            return Err(Error::NoEvents(a));
        }
    }
    let table = event_table(dataset);
    let mut beta = 0.0;
    let (mut loglik, mut score, mut info) = derivatives(&table, beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if !(info > 0.0) {
            break;
        }
        let mut step = score / info;
        let mut next = derivatives(&table, beta + step);
        let mut halvings = 0;
        while !(next.0 >= loglik) && halvings < 30 {
            step /= 2.0;
            next = derivatives(&table, beta + step);
            halvings += 1;
        }
        beta += step;
        (loglik, score, info) = next;
        if beta.abs() > MAX_ABS_LOG_HR {
            break;
        }
        if step.abs() < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("Cox fit did not converge after {iterations} iterations (beta = {beta})");
    }
    let standard_error = if info > 0.0 { 1.0 / info.sqrt() } else { f64::INFINITY };
    Ok(CoxFit { log_hr: beta, standard_error, iterations, converged })
}
