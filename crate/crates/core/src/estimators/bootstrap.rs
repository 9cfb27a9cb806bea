use rand::Rng;

use crate::curve::AccelCurve;
use crate::error::{invalid, Result};
use crate::parallel::map_indexed;
use crate::rng::{StreamSeed, LATENT_STREAM};
use crate::scm::Dataset;

pub const MIN_REPLICATES: usize = 100;

/// Share of replicates allowed to leave a gridpoint unidentified before its
/// band is dropped.
pub const MAX_MISSING_SHARE: f64 = 0.2;

/// Percentile 95% band from `b` nonparametric resamples of the records.
///
/// `estimator` must evaluate on a fixed grid so that replicate curves line up
/// with the point estimate. Replicate `i` resamples with `seed.derive(i)`.
pub fn bootstrap_band<F>(dataset: &Dataset, estimator: F, b: usize, seed: StreamSeed) -> Result<AccelCurve>
where
    F: Fn(&Dataset) -> Result<AccelCurve> + Sync + Send,
{
    if b < MIN_REPLICATES {
        return Err(invalid(format!("bootstrap needs at least {MIN_REPLICATES} replicates, got {b}")));
    }
    let mut curve = estimator(dataset)?;
    let n = dataset.len();
    let replicates: Vec<Option<Vec<Option<f64>>>> = map_indexed(b, |i| {
        let mut rng = seed.derive(i as u64).rng(LATENT_STREAM);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        estimator(&dataset.select(&idx)).ok().map(|c| c.values())
    });
    for (j, point) in curve.points.iter_mut().enumerate() {
        let mut vals: Vec<f64> = replicates
            .iter()
            .filter_map(|r| r.as_ref().and_then(|v| v.get(j).copied().flatten()))
            .collect();
        let missing = b - vals.len();
        point.band = if vals.is_empty() || missing as f64 > MAX_MISSING_SHARE * b as f64 {
            None
        } else {
            vals.sort_by(f64::total_cmp);
            Some((percentile(&vals, 0.025), percentile(&vals, 0.975)))
        };
    }
    Ok(curve)
}

// Linear interpolation between order statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
