use crate::curve::{AccelCurve, AccelPoint, Grid, Provenance};
use crate::error::{Error, Result};

use super::km::StepSurvival;

/// Treated-arm survival levels used for the scalar summary of θ̂_m.
pub const SUMMARY_LEVELS: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];

const MAX_DEFAULT_GRID: usize = 200;

fn step_theta(curve_0: &StepSurvival, curve_a: &StepSurvival, grid: &Grid, provenance: Provenance) -> Result<AccelCurve> {
    grid.validate()?;
    let points: Vec<AccelPoint> = grid
        .points()
        .iter()
        .map(|&x| match grid {
            Grid::Times(_) => {
                let level = curve_a.eval(x);
                let value = if x > curve_a.last_time {
                    None
                } else {
                    curve_0.quantile(level).ok().map(|q| q / x)
                };
                AccelPoint { t: x, treated_cdf: 1.0 - level, value, band: None }
            }
            Grid::TreatedCdf(_) => {
                let level = 1.0 - x;
                let pair = curve_a.quantile(level).ok().zip(curve_0.quantile(level).ok());
                AccelPoint {
                    t: pair.map_or(f64::NAN, |p| p.0),
                    treated_cdf: x,
                    value: pair.map(|(t, q)| q / t),
                    band: None,
                }
            }
        })
        .collect();
    if points.iter().all(|p| p.value.is_none()) {
        return Err(Error::NoOverlap);
    }
    Ok(AccelCurve { axis: grid.axis(), provenance, points })
}

/// θ̂_m(t) = Ŝ₀⁻¹(Ŝ_a(t)) / t from two arm-specific curves. Gridpoints where
/// the quantile is not identified are left empty.
pub fn observed_theta(curve_0: &StepSurvival, curve_a: &StepSurvival, grid: &Grid) -> Result<AccelCurve> {
    step_theta(curve_0, curve_a, grid, Provenance::Estimated)
}

/// Same construction applied to confounder-standardized curves.
pub fn adjusted_theta(adj_0: &StepSurvival, adj_a: &StepSurvival, grid: &Grid) -> Result<AccelCurve> {
    step_theta(adj_0, adj_a, grid, Provenance::Adjusted)
}

/// Jump times of the treated curve, thinned evenly to at most 200 points.
pub fn default_time_grid(curve_a: &StepSurvival) -> Grid {
    let jumps = &curve_a.jump_times;
    if jumps.len() <= MAX_DEFAULT_GRID {
        return Grid::Times(jumps.clone());
    }
    let step = jumps.len() as f64 / MAX_DEFAULT_GRID as f64;
    let mut pts: Vec<f64> = (0..MAX_DEFAULT_GRID).map(|i| jumps[(i as f64 * step) as usize]).collect();
    pts.dedup();
    Grid::Times(pts)
}

/// Median over `levels` of the quantile ratio `Ŝ₀⁻¹(s) / Ŝ_a⁻¹(s)`, skipping
/// levels that are not identified. `None` when no level is.
pub fn quantile_ratio_summary(curve_0: &StepSurvival, curve_a: &StepSurvival, levels: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = levels
        .iter()
        .filter_map(|&s| Some(curve_0.quantile(s).ok()? / curve_a.quantile(s).ok()?))
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
