use crate::error::{Error, Result};
use crate::scm::Dataset;

/// Difference in mean log time between arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTFit {
    /// `mean log T | A=1  -  mean log T | A=0`.
    pub log_diff: f64,
    /// `exp(-log_diff)`, the acceleration factor under homogeneity.
    pub theta_hat: f64,
}

/// Regression of `log T` on the treatment indicator. Requires complete data:
/// with censoring the arm means no longer estimate `E[log T]`.
pub fn logt_regression(dataset: &Dataset) -> Result<LogTFit> {
    let censored = dataset.censored_count();
    if censored > 0 {
        log::warn!("refusing log-time regression on {censored} censored records");
        return Err(Error::CensoredData(censored));
    }
    let mut sums = [(0.0f64, 0usize); 2];
    for r in &dataset.records {
        let s = &mut sums[(r.a == 1) as usize];
        s.0 += r.t_obs.ln();
        s.1 += 1;
    }
    for (a, s) in sums.iter().enumerate() {
        if s.1 == 0 {
            return Err(Error::EmptyArm(a as u8));
        }
    }
    let log_diff = sums[1].0 / sums[1].1 as f64 - sums[0].0 / sums[0].1 as f64;
    Ok(LogTFit { log_diff, theta_hat: (-log_diff).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::CohortRecord;

    fn rec(t: f64, d: bool, a: u8) -> CohortRecord {
        CohortRecord { u0: 1.0, u1: 1.0, l: None, a, t0: t, ta: t, t_obs: t, d }
    }

    #[test]
    fn geometric_means() {
        let ds = Dataset::new(vec![rec(1.0, true, 0), rec(4.0, true, 0), rec(1.0, true, 1), rec(1.0, true, 1)]);
        let fit = logt_regression(&ds).unwrap();
        assert!((fit.theta_hat - 2.0).abs() < 1e-14);
    }

    #[test]
    fn refuses_censored() {
        let ds = Dataset::new(vec![rec(1.0, false, 0), rec(1.0, true, 1)]);
        assert_eq!(logt_regression(&ds).unwrap_err(), Error::CensoredData(1));
    }
}
