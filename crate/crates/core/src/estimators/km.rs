use std::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::oracle::SurvivalFunction;
use crate::scm::Dataset;

/// Right-continuous step survival curve, `1` before the first jump.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvival {
    pub jump_times: Vec<f64>,
    /// Survival just after each jump.
    pub values: Vec<f64>,
    /// (Weighted) number at risk just before each jump.
    pub at_risk: Vec<f64>,
    /// (Weighted) number of events at each jump.
    pub events: Vec<f64>,
    pub arm: u8,
    /// Largest observed time (event or censoring) in the sample.
    pub last_time: f64,
}

impl StepSurvival {
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&x| x <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Smallest value attained.
    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(1.0)
    }

    /// `sup { t : S(t) >= p }`: the first jump taking the curve below `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid(format!("quantile level must lie in (0, 1], got {p}")));
        }
        let k = self.values.partition_point(|&v| v >= p);
        match self.jump_times.get(k) {
            Some(&t) => Ok(t),
            None => Err(Error::BeyondSupport { level: p, infimum: self.min_value() }),
        }
    }

    /// Greenwood variance of the estimate at `t` (unweighted counts).
    pub fn greenwood_variance(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&x| x <= t);
        let s = self.eval(t);
        let sum: f64 = (0..k)
            .map(|j| {
                let (d, r) = (self.events[j], self.at_risk[j]);
                if r > d {
                    d / (r * (r - d))
                } else {
                    0.0
                }
            })
            .sum();
        s * s * sum
    }
}

impl SurvivalFunction for StepSurvival {
    fn survival(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        StepSurvival::quantile(self, p)
    }
}

fn sorted_order(times: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..times.len()).collect();
    idx.sort_by(|&i, &j| times[i].partial_cmp(&times[j]).unwrap_or(Ordering::Equal));
    idx
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("observed times must be finite and non-negative"));
    }
    Ok(())
}

/// Product-limit estimate for arm `a`; tied times form a single jump.
pub fn kaplan_meier(dataset: &Dataset, a: u8) -> Result<StepSurvival> {
    let (times, events): (Vec<f64>, Vec<bool>) = dataset.arm(a).map(|r| (r.t_obs, r.d)).unzip();
    km_counts(&times, &events, a)
}

fn km_counts(times: &[f64], events: &[bool], arm: u8) -> Result<StepSurvival> {
    if times.is_empty() {
        return Err(Error::EmptyArm(arm));
    }
    check_times(times)?;
    let order = sorted_order(times);
    let n = times.len();
    let mut out = empty_curve(arm, times[order[n - 1]]);
    let mut s = 1.0;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let at_risk = n - i;
        let mut d = 0usize;
        while i < n && times[order[i]] == t {
            d += events[order[i]] as usize;
            i += 1;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / at_risk as f64;
            out.push(t, s, at_risk as f64, d as f64);
        }
    }
    finish(out)
}

/// Product-limit estimate with case weights (e.g. inverse propensities).
pub fn weighted_kaplan_meier(times: &[f64], events: &[bool], weights: &[f64], arm: u8) -> Result<StepSurvival> {
    if times.len() != events.len() || times.len() != weights.len() {
        return Err(invalid("times, events and weights must have equal length"));
    }
    if times.is_empty() {
        return Err(Error::EmptyArm(arm));
    }
    check_times(times)?;
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("weights must be finite and non-negative"));
    }
    let order = sorted_order(times);
    let n = times.len();
    // Weighted risk set sizes, accumulated from the right.
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1] + weights[order[k]];
    }
    let mut out = empty_curve(arm, times[order[n - 1]]);
    let mut s = 1.0;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let at_risk = tail[i];
        let mut d = 0.0;
        while i < n && times[order[i]] == t {
            if events[order[i]] {
                d += weights[order[i]];
            }
            i += 1;
        }
        if d > 0.0 {
            s *= 1.0 - d / at_risk;
            out.push(t, s, at_risk, d);
        }
    }
    finish(out)
}

fn empty_curve(arm: u8, last_time: f64) -> StepSurvival {
    StepSurvival { jump_times: vec![], values: vec![], at_risk: vec![], events: vec![], arm, last_time }
}

impl StepSurvival {
    fn push(&mut self, t: f64, s: f64, r: f64, d: f64) {
        self.jump_times.push(t);
        self.values.push(s.max(0.0));
        self.at_risk.push(r);
        self.events.push(d);
    }
}

fn finish(curve: StepSurvival) -> Result<StepSurvival> {
    if curve.jump_times.is_empty() {
        log::warn!("arm {} has no events; Kaplan-Meier curve is flat at 1", curve.arm);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_product_limit() {
        let s = km_counts(&[1.0, 2.0, 3.0, 4.0], &[true, false, true, true], 0).unwrap();
        assert_eq!(s.jump_times, vec![1.0, 3.0, 4.0]);
        assert_eq!(s.eval(1.0), 0.75);
        assert_eq!(s.eval(2.5), 0.75);
        assert_eq!(s.eval(3.0), 0.375);
        assert_eq!(s.eval(4.0), 0.0);
        assert_eq!(s.eval(0.5), 1.0);
    }

    #[test]
    fn two_step_sup_quantile() {
        let s = StepSurvival {
            jump_times: vec![2.0, 5.0],
            values: vec![0.6, 0.3],
            at_risk: vec![10.0, 6.0],
            events: vec![4.0, 3.0],
            arm: 0,
            last_time: 5.0,
        };
        assert_eq!(s.quantile(0.6).unwrap(), 5.0);
        assert_eq!(s.quantile(0.7).unwrap(), 2.0);
        assert_eq!(s.quantile(0.3).unwrap_err(), Error::BeyondSupport { level: 0.3, infimum: 0.3 });
        assert!(s.quantile(0.0).is_err());
    }

    #[test]
    fn ties_aggregate_into_one_jump() {
        let s = km_counts(&[1.0, 1.0, 1.0, 2.0], &[true, true, false, true], 1).unwrap();
        assert_eq!(s.jump_times, vec![1.0, 2.0]);
        assert_eq!(s.values[0], 0.5);
        assert_eq!(s.events[0], 2.0);
        assert_eq!(s.at_risk[0], 4.0);
    }

    #[test]
    fn uncensored_is_empirical_survival() {
        let t = [0.3, 2.2, 1.1, 0.7, 5.0];
        let s = km_counts(&t, &[true; 5], 0).unwrap();
        for x in [0.1, 0.3, 0.8, 1.5, 3.0, 6.0] {
            let emp = t.iter().filter(|&&v| v > x).count() as f64 / 5.0;
            assert!((s.eval(x) - emp).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_weights_match_bitwise() {
        let t = [0.5, 1.2, 1.2, 3.3, 0.9, 4.4, 2.0, 1.2];
        let d = [true, false, true, true, false, true, true, true];
        let a = km_counts(&t, &d, 0).unwrap();
        let b = weighted_kaplan_meier(&t, &d, &[1.0; 8], 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_and_all_censored() {
        assert_eq!(km_counts(&[], &[], 1).unwrap_err(), Error::EmptyArm(1));
        let flat = km_counts(&[1.0, 2.0], &[false, false], 0).unwrap();
        assert!(flat.jump_times.is_empty());
        assert_eq!(flat.eval(10.0), 1.0);
    }
}
