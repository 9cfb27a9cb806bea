//! Acceleration-factor curves shared by the oracle and the estimators.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Axis on which a curve's grid is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Time,
    /// `1 - S_{T^a}(t)`, the treated-arm CDF.
    TreatedCdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Oracle,
    Estimated,
    Adjusted,
}

/// Evaluation grid: either time points or treated-arm CDF levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "points", rename_all = "snake_case")]
pub enum Grid {
    Times(Vec<f64>),
    TreatedCdf(Vec<f64>),
}

impl Grid {
    pub fn axis(&self) -> Axis {
        match self {
            Grid::Times(_) => Axis::Time,
            Grid::TreatedCdf(_) => Axis::TreatedCdf,
        }
    }

    pub fn points(&self) -> &[f64] {
        match self {
            Grid::Times(p) | Grid::TreatedCdf(p) => p,
        }
    }

    /// `n` evenly spaced CDF levels from `lo` to `hi` inclusive.
    pub fn cdf_levels(lo: f64, hi: f64, n: usize) -> Grid {
        Grid::TreatedCdf(linspace(lo, hi, n))
    }

    pub fn validate(&self) -> Result<()> {
        let pts = self.points();
        if pts.is_empty() {
            return Err(invalid("empty grid"));
        }
        if pts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid must be strictly increasing"));
        }
        match self {
            Grid::Times(p) if p[0] <= 0.0 => Err(invalid("time grid must be positive")),
            Grid::TreatedCdf(p) if p[0] <= 0.0 || p[p.len() - 1] >= 1.0 => {
                Err(invalid("CDF levels must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One gridpoint. `value` is `None` where θ is not identified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelPoint {
    pub t: f64,
    pub treated_cdf: f64,
    pub value: Option<f64>,
    pub band: Option<(f64, f64)>,
}

impl AccelPoint {
    /// Position on the given axis.
    pub fn coordinate(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Time => self.t,
            Axis::TreatedCdf => self.treated_cdf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelCurve {
    pub axis: Axis,
    pub provenance: Provenance,
    pub points: Vec<AccelPoint>,
}

impl AccelCurve {
    pub fn values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn identified(&self) -> impl Iterator<Item = &AccelPoint> {
        self.points.iter().filter(|p| p.value.is_some())
    }

    /// Largest absolute difference with `other` over gridpoints identified in both.
    pub fn max_abs_diff(&self, other: &AccelCurve) -> Option<f64> {
        self.points
            .iter()
            .zip(&other.points)
            .filter_map(|(a, b)| Some((a.value? - b.value?).abs()))
            .fold(None, |m, d| Some(m.map_or(d, |m: f64| m.max(d))))
    }

    /// Positive values and a strictly increasing axis.
    pub fn check_invariants(&self) -> bool {
        let coords: Vec<f64> = self.points.iter().map(|p| p.coordinate(self.axis)).collect();
        coords.windows(2).all(|w| w[1] > w[0])
            && self.points.iter().all(|p| p.value.is_none_or(|v| v > 0.0 && v.is_finite()))
    }

    /// Median of the identified values.
    pub fn median_value(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.points.iter().filter_map(|p| p.value).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::Times(vec![1.0, 2.0]).validate().is_ok());
        assert!(Grid::Times(vec![0.0, 2.0]).validate().is_err());
        assert!(Grid::Times(vec![2.0, 2.0]).validate().is_err());
        assert!(Grid::TreatedCdf(vec![0.1, 1.0]).validate().is_err());
        assert_eq!(Grid::cdf_levels(0.1, 0.9, 9).points().len(), 9);
    }

    #[test]
    fn median_of_identified() {
        let mk = |v: Option<f64>, t| AccelPoint { t, treated_cdf: t / 10.0, value: v, band: None };
        let c = AccelCurve {
            axis: Axis::Time,
            provenance: Provenance::Estimated,
            points: vec![mk(Some(3.0), 1.0), mk(None, 2.0), mk(Some(1.0), 3.0), mk(Some(2.0), 4.0)],
        };
        assert_eq!(c.median_value(), Some(2.0));
        assert!(c.check_invariants());
    }
}
