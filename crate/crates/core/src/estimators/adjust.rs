use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scm::{Dataset, TreatmentSpec};

use super::km::{kaplan_meier, weighted_kaplan_meier, StepSurvival};

/// Smallest arm propensity accepted by the IPW estimator.
pub const POSITIVITY_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method", content = "bins")]
pub enum AdjustMethod {
    /// Kaplan–Meier weighted by `1 / P(A = a | L)` from the design.
    Ipw,
    /// Equal-mass bins of `L`, per-bin Kaplan–Meier averaged with bin masses.
    Stratify(usize),
}

/// Confounder-standardized survival curve `∫ S(t | L = l, A = a) dF_L(l)`.
pub fn adjusted_survival(dataset: &Dataset, a: u8, method: AdjustMethod, treatment: &TreatmentSpec) -> Result<StepSurvival> {
    if !dataset.has_confounder() {
        return Err(Error::MissingConfounder);
    }
    match method {
        AdjustMethod::Ipw => ipw(dataset, a, treatment),
        AdjustMethod::Stratify(k) => stratify(dataset, a, k),
    }
}

fn ipw(dataset: &Dataset, a: u8, treatment: &TreatmentSpec) -> Result<StepSurvival> {
    treatment.validate()?;
    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut weights = Vec::new();
    for r in dataset.arm(a) {
        let p1 = treatment.propensity(r.l);
        let p = if a == 1 { p1 } else { 1.0 - p1 };
        if p < POSITIVITY_FLOOR {
            return Err(Error::Positivity { propensity: p, floor: POSITIVITY_FLOOR });
        }
        times.push(r.t_obs);
        events.push(r.d);
        weights.push(1.0 / p);
    }
    weighted_kaplan_meier(&times, &events, &weights, a)
}

fn stratify(dataset: &Dataset, a: u8, k: usize) -> Result<StepSurvival> {
    if k == 0 || k > dataset.len() {
        return Err(invalid(format!("number of strata must be in 1..={}, got {k}", dataset.len())));
    }
    // Bin edges at the empirical L quantiles of the whole sample.
    let mut ls: Vec<f64> = dataset.records.iter().map(|r| r.l.unwrap()).collect();
    ls.sort_by(f64::total_cmp);
    let n = ls.len();
    let edges: Vec<f64> = (1..k).map(|j| ls[j * n / k]).collect();
    let bin = |l: f64| edges.partition_point(|&e| e <= l);

    let mut masses = vec![0usize; k];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, r) in dataset.records.iter().enumerate() {
        let b = bin(r.l.unwrap());
        masses[b] += 1;
        if r.a == a {
            members[b].push(i);
        }
    }
    let mut curves = Vec::with_capacity(k);
    for (b, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            return Err(Error::EmptyStratum(b));
        }
        curves.push(kaplan_meier(&dataset.select(idx), a)?);
    }

    let mut jumps: Vec<f64> = curves.iter().flat_map(|c| c.jump_times.iter().copied()).collect();
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();
    let weights: Vec<f64> = masses.iter().map(|&m| m as f64 / n as f64).collect();
    let mut out = StepSurvival {
        jump_times: Vec::with_capacity(jumps.len()),
        values: Vec::with_capacity(jumps.len()),
        at_risk: Vec::with_capacity(jumps.len()),
        events: Vec::with_capacity(jumps.len()),
        arm: a,
        last_time: curves.iter().map(|c| c.last_time).fold(f64::INFINITY, f64::min),
    };
    // Sweep the union of jump times, tracking each stratum's position.
    let mut pos = vec![0usize; k];
    for &t in &jumps {
        let (mut s, mut r, mut d) = (0.0, 0.0, 0.0);
        for (b, c) in curves.iter().enumerate() {
            if pos[b] < c.jump_times.len() && c.jump_times[pos[b]] == t {
                r += c.at_risk[pos[b]];
                d += c.events[pos[b]];
                pos[b] += 1;
            }
            s += weights[b] * if pos[b] == 0 { 1.0 } else { c.values[pos[b] - 1] };
        }
        out.jump_times.push(t);
        out.values.push(s.clamp(0.0, 1.0));
        out.at_risk.push(r);
        out.events.push(d);
    }
    Ok(out)
}
