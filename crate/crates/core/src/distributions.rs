//! Laws used by the structural model: frailty `U0`, effect heterogeneity `U1`,
//! the extreme-value noise of the log-linear Weibull representation, and a
//! Gaussian copula for a confounder associated with `U0` and `U1`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{invalid, Error, Result};

/// Allowed gap between a BHN law's mean and the mean it is meant to
/// reproduce. Published BHN parameters are rounded to two decimals.
pub const BHN_MEAN_TOLERANCE: f64 = 0.025;

/// Frailty law with unit mean and variance `variance` (ρ0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrailtyLaw {
    Degenerate,
    /// Γ(shape = 1/ρ0, scale = ρ0).
    Gamma { variance: f64 },
    /// IG(mean = 1, shape = 1/ρ0).
    InverseGaussian { variance: f64 },
}

/// Law of the individual time-scale acceleration factor `exp f1(U1, 1)`.
///
/// A treated potential outcome is `T¹ = T⁰ / U1`, so values above one shorten
/// survival (harm) and values below one lengthen it (benefit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectLaw {
    /// Homogeneous effect: every individual has the same factor.
    Degenerate { factor: f64 },
    /// Benefit–harm–neutral: `mu1` w.p. `p1`, `mu2` w.p. `p2`, 1 otherwise.
    Bhn { p1: f64, mu1: f64, p2: f64, mu2: f64 },
    /// Gamma with the given mean and variance (ρ1).
    Gamma { mean: f64, variance: f64 },
}

/// Common surface of the positive laws above.
pub trait PositiveLaw {
    fn validate(&self) -> Result<()>;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    /// Generalised inverse CDF, `inf { x : F(x) >= u }`.
    fn quantile(&self, u: f64) -> f64;
    fn sampler(&self) -> Result<PositiveSampler>;
}

fn check_variance(v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(invalid(format!("variance must be finite and non-negative, got {v}")));
    }
    Ok(())
}

impl FrailtyLaw {
    pub fn gamma(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(if variance == 0.0 { FrailtyLaw::Degenerate } else { FrailtyLaw::Gamma { variance } })
    }

    pub fn inverse_gaussian(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(if variance == 0.0 {
            FrailtyLaw::Degenerate
        } else {
            FrailtyLaw::InverseGaussian { variance }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FrailtyLaw::Degenerate => "degenerate",
            FrailtyLaw::Gamma { .. } => "gamma",
            FrailtyLaw::InverseGaussian { .. } => "inverse_gaussian",
        }
    }

    /// `E[exp(-U0 s)]`.
    pub fn laplace_transform(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(invalid(format!("Laplace argument must be non-negative, got {s}")));
        }
        Ok(self.laplace_unchecked(s))
    }

    pub(crate) fn laplace_unchecked(&self, s: f64) -> f64 {
        match *self {
            FrailtyLaw::Degenerate => (-s).exp(),
            FrailtyLaw::Gamma { variance } => (-(variance * s).ln_1p() / variance).exp(),
            // (1/ρ)(1 - √(1+2ρs)) rewritten without cancellation.
            FrailtyLaw::InverseGaussian { variance } => {
                (-2.0 * s / (1.0 + (1.0 + 2.0 * variance * s).sqrt())).exp()
            }
        }
    }

    /// Derivative of the Laplace transform, `-E[U0 exp(-U0 s)]`.
    pub(crate) fn laplace_derivative(&self, s: f64) -> f64 {
        match *self {
            FrailtyLaw::Degenerate => -(-s).exp(),
            FrailtyLaw::Gamma { variance } => {
                -(-(1.0 / variance + 1.0) * (variance * s).ln_1p()).exp()
            }
            FrailtyLaw::InverseGaussian { variance } => {
                let r = (1.0 + 2.0 * variance * s).sqrt();
                -self.laplace_unchecked(s) / r
            }
        }
    }
}

impl PositiveLaw for FrailtyLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            FrailtyLaw::Degenerate => Ok(()),
            FrailtyLaw::Gamma { variance } | FrailtyLaw::InverseGaussian { variance } => {
                check_variance(variance)?;
                if variance == 0.0 {
                    return Err(invalid("zero-variance frailty must be written as Degenerate"));
                }
                Ok(())
            }
        }
    }

    fn mean(&self) -> f64 {
        1.0
    }

    fn variance(&self) -> f64 {
        match *self {
            FrailtyLaw::Degenerate => 0.0,
            FrailtyLaw::Gamma { variance } | FrailtyLaw::InverseGaussian { variance } => variance,
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match *self {
            FrailtyLaw::Degenerate => 1.0,
            FrailtyLaw::Gamma { variance } => variance * gamma_quantile(1.0 / variance, u),
            FrailtyLaw::InverseGaussian { variance } => inverse_gaussian_quantile(1.0, 1.0 / variance, u),
        }
    }

    fn sampler(&self) -> Result<PositiveSampler> {
        self.validate()?;
        Ok(match *self {
            FrailtyLaw::Degenerate => PositiveSampler::Constant(1.0),
            FrailtyLaw::Gamma { variance } => PositiveSampler::Gamma(
                rand_distr::Gamma::new(1.0 / variance, variance).map_err(|e| invalid(e.to_string()))?,
            ),
            FrailtyLaw::InverseGaussian { variance } => PositiveSampler::InverseGaussian(
                rand_distr::InverseGaussian::new(1.0, 1.0 / variance).map_err(|e| invalid(e.to_string()))?,
            ),
        })
    }
}

impl EffectLaw {
    /// Homogeneous effect specified on the hazard scale: a Weibull model with
    /// hazard ratio `exp β` and shape `1/σ` has time-scale factor `(exp β)^σ`.
    pub fn from_hazard_ratio(hazard_ratio: f64, sigma: f64) -> Result<Self> {
        if !(hazard_ratio > 0.0 && sigma > 0.0) {
            return Err(invalid("hazard ratio and sigma must be positive"));
        }
        Ok(EffectLaw::Degenerate { factor: hazard_ratio.powf(sigma) })
    }

    pub fn null() -> Self {
        EffectLaw::Degenerate { factor: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EffectLaw::Degenerate { .. } => "degenerate",
            EffectLaw::Bhn { .. } => "bhn",
            EffectLaw::Gamma { .. } => "gamma",
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self, EffectLaw::Degenerate { .. })
    }

    /// Finite support as `(probability, value)` pairs, if the law is discrete.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            EffectLaw::Degenerate { factor } => Some(vec![(1.0, factor)]),
            EffectLaw::Bhn { p1, mu1, p2, mu2 } => {
                Some(vec![(p1, mu1), (1.0 - p1 - p2, 1.0), (p2, mu2)])
            }
            EffectLaw::Gamma { .. } => None,
        }
    }

    /// Shape and scale of the Gamma variant.
    pub fn gamma_shape_scale(&self) -> Option<(f64, f64)> {
        match *self {
            EffectLaw::Gamma { mean, variance } => Some((mean * mean / variance, variance / mean)),
            _ => None,
        }
    }

    /// Checks that the law's mean reproduces `target` within [`BHN_MEAN_TOLERANCE`].
    pub fn check_target_mean(&self, target: f64) -> Result<()> {
        let m = self.mean();
        if (m - target).abs() > BHN_MEAN_TOLERANCE {
            return Err(invalid(format!("effect law mean {m:.4} differs from target {target:.4}")));
        }
        Ok(())
    }

    /// `E[1/U1]`, infinite when the Gamma shape is at most one.
    pub fn mean_reciprocal(&self) -> f64 {
        match *self {
            EffectLaw::Gamma { .. } => {
                let (k, s) = self.gamma_shape_scale().unwrap();
                if k <= 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / (s * (k - 1.0))
                }
            }
            _ => self.atoms().unwrap().iter().map(|(p, v)| p / v).sum(),
        }
    }
}

impl PositiveLaw for EffectLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            EffectLaw::Degenerate { factor } => {
                if !(factor.is_finite() && factor > 0.0) {
                    return Err(invalid(format!("effect factor must be positive, got {factor}")));
                }
            }
            EffectLaw::Bhn { p1, mu1, p2, mu2 } => {
                if !(p1 >= 0.0 && p2 >= 0.0 && p1 + p2 <= 1.0 + 1e-12) {
                    return Err(invalid(format!("BHN probabilities ({p1}, {p2}) outside the simplex")));
                }
                if !(mu1 > 0.0 && mu1 < 1.0 && mu2 > 1.0 && mu2.is_finite()) {
                    return Err(invalid(format!("BHN needs 0 < mu1 < 1 < mu2, got ({mu1}, {mu2})")));
                }
            }
            EffectLaw::Gamma { mean, variance } => {
                if !(mean > 0.0 && mean.is_finite() && variance > 0.0 && variance.is_finite()) {
                    return Err(invalid("Gamma effect law needs positive mean and variance"));
                }
            }
        }
        Ok(())
    }

    fn mean(&self) -> f64 {
        match *self {
            EffectLaw::Gamma { mean, .. } => mean,
            _ => self.atoms().unwrap().iter().map(|(p, v)| p * v).sum(),
        }
    }

    fn variance(&self) -> f64 {
        match *self {
            EffectLaw::Gamma { variance, .. } => variance,
            _ => {
                let m = self.mean();
                self.atoms().unwrap().iter().map(|(p, v)| p * (v - m) * (v - m)).sum()
            }
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match *self {
            EffectLaw::Degenerate { factor } => factor,
            EffectLaw::Bhn { p1, mu1, p2, mu2 } => {
                if u <= p1 {
                    mu1
                } else if u <= 1.0 - p2 {
                    1.0
                } else {
                    mu2
                }
            }
            EffectLaw::Gamma { .. } => {
                let (k, s) = self.gamma_shape_scale().unwrap();
                s * gamma_quantile(k, u)
            }
        }
    }

    fn sampler(&self) -> Result<PositiveSampler> {
        self.validate()?;
        Ok(match *self {
            EffectLaw::Degenerate { factor } => PositiveSampler::Constant(factor),
            EffectLaw::Bhn { p1, mu1, p2, mu2 } => PositiveSampler::Bhn { p1, mu1, p2, mu2 },
            EffectLaw::Gamma { .. } => {
                let (k, s) = self.gamma_shape_scale().unwrap();
                PositiveSampler::Gamma(rand_distr::Gamma::new(k, s).map_err(|e| invalid(e.to_string()))?)
            }
        })
    }
}

/// Prepared sampler for one of the positive laws.
#[derive(Debug, Clone, Copy)]
pub enum PositiveSampler {
    Constant(f64),
    Gamma(rand_distr::Gamma<f64>),
    InverseGaussian(rand_distr::InverseGaussian<f64>),
    Bhn { p1: f64, mu1: f64, p2: f64, mu2: f64 },
}

impl Distribution<f64> for PositiveSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PositiveSampler::Constant(c) => *c,
            PositiveSampler::Gamma(g) => g.sample(rng),
            PositiveSampler::InverseGaussian(ig) => ig.sample(rng),
            PositiveSampler::Bhn { p1, mu1, p2, mu2 } => {
                let u: f64 = rng.random();
                if u < *p1 {
                    *mu1
                } else if u < 1.0 - *p2 {
                    1.0
                } else {
                    *mu2
                }
            }
        }
    }
}

/// Draws one value from `law`.
pub fn sample<L: PositiveLaw, R: Rng + ?Sized>(law: &L, rng: &mut R) -> Result<f64> {
    Ok(law.sampler()?.sample(rng))
}

/// Standard extreme value variate of minimum type: `exp(W)` is unit
/// exponential, so `P(exp(W) > t) = exp(-t)`.
pub fn sample_standard_extreme_value<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e.ln()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Gaussian copula for `(L, U0, U1)` with `U0 ⫫ U1` and Kendall's τ of `L`
/// with each of them prescribed.
///
/// Uses `ρ = sin(πτ/2)`. The latent normal of `L` is built as
/// `ρ0 Z0 + ρ1 Z1 + √(1 - ρ0² - ρ1²) Z2`, which stays valid on the boundary
/// `ρ0² + ρ1² = 1` where the correlation matrix is singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCopula {
    pub tau0: f64,
    pub tau1: f64,
    rho0: f64,
    rho1: f64,
    residual_sd: f64,
}

impl GaussianCopula {
    pub fn new(tau0: f64, tau1: f64) -> Result<Self> {
        for t in [tau0, tau1] {
            if !(t.abs() < 1.0) {
                return Err(invalid(format!("Kendall tau must lie in (-1, 1), got {t}")));
            }
        }
        let rho0 = kendall_to_pearson(tau0);
        let rho1 = kendall_to_pearson(tau1);
        let residual = 1.0 - rho0 * rho0 - rho1 * rho1;
        if residual < -1e-12 {
            return Err(Error::NotPositiveDefinite(residual));
        }
        Ok(GaussianCopula { tau0, tau1, rho0, rho1, residual_sd: residual.max(0.0).sqrt() })
    }

    pub fn correlations(&self) -> (f64, f64) {
        (self.rho0, self.rho1)
    }

    /// Returns `(u_L, u_0, u_1)`, each uniform on (0, 1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let zl = self.rho0 * z0 + self.rho1 * z1 + self.residual_sd * z2;
        [open_unit(normal_cdf(zl)), open_unit(normal_cdf(z0)), open_unit(normal_cdf(z1))]
    }
}

/// Convenience wrapper around [`GaussianCopula`].
pub fn gaussian_copula_sample<R: Rng + ?Sized>(kendall_taus: (f64, f64), rng: &mut R) -> Result<[f64; 3]> {
    Ok(GaussianCopula::new(kendall_taus.0, kendall_taus.1)?.sample(rng))
}

pub fn kendall_to_pearson(tau: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * tau).sin()
}

fn open_unit(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Quantile of Γ(shape, 1) by safeguarded Newton iteration on `ln x`.
pub fn gamma_quantile(shape: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let upper = p > 0.5;
    // Residual as a function of y = ln x; increasing in y.
    let resid = |y: f64| {
        let x = y.exp();
        if upper {
            (1.0 - p) - gamma_ur(shape, x)
        } else {
            gamma_lr(shape, x) - p
        }
    };
    let log_density_times_x = |y: f64| shape * y - y.exp() - ln_gamma(shape);

    let mut lo = -700.0_f64;
    let mut hi = (shape + 10.0 * shape.sqrt() + 10.0).ln();
    while resid(hi) < 0.0 {
        hi += 1.0;
    }
    if resid(lo) > 0.0 {
        return lo.exp();
    }
    // Start from the small-x expansion or the mean, whichever is bracketed.
    let small = ((p * shape).ln() + ln_gamma(shape)) / shape;
    let mut y = if small > lo && small < hi && p < 0.1 { small } else { shape.ln().clamp(lo, hi) };
    for _ in 0..200 {
        let r = resid(y);
        if r == 0.0 {
            return y.exp();
        }
        if r < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let step = r / log_density_times_x(y).exp();
        let mut next = y - step;
        if !(next > lo && next < hi) || !step.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() < 1e-15 * (1.0 + y.abs()) || hi - lo < 1e-15 * (1.0 + y.abs()) {
            return next.exp();
        }
        y = next;
    }
    y.exp()
}

/// CDF of IG(mean, shape).
pub fn inverse_gaussian_cdf(mean: f64, shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let r = (shape / x).sqrt();
    let a = normal_cdf(r * (x / mean - 1.0));
    let tail = 0.5 * erfc(r * (x / mean + 1.0) / std::f64::consts::SQRT_2);
    let b = if tail > 0.0 { (2.0 * shape / mean + tail.ln()).exp() } else { 0.0 };
    (a + b).min(1.0)
}

/// Quantile of IG(mean, shape) by bisection on `ln x`.
pub fn inverse_gaussian_quantile(mean: f64, shape: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut lo = (mean * 1e-300_f64).ln();
    let mut hi = mean.ln() + 1.0;
    while inverse_gaussian_cdf(mean, shape, hi.exp()) < p {
        hi += 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inverse_gaussian_cdf(mean, shape, mid.exp()) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeed;

    #[test]
    fn degenerate_is_point_mass() {
        let mut rng = StreamSeed(1).rng(0);
        for _ in 0..100 {
            assert_eq!(sample(&FrailtyLaw::Degenerate, &mut rng).unwrap(), 1.0);
        }
    }

    #[test]
    fn zero_variance_forces_degenerate() {
        assert_eq!(FrailtyLaw::gamma(0.0).unwrap(), FrailtyLaw::Degenerate);
        assert_eq!(FrailtyLaw::inverse_gaussian(0.0).unwrap(), FrailtyLaw::Degenerate);
        assert!(FrailtyLaw::gamma(-0.1).is_err());
        assert!(FrailtyLaw::Gamma { variance: 0.0 }.validate().is_err());
    }

    #[test]
    fn bhn_parameter_checks() {
        assert!(EffectLaw::Bhn { p1: 0.6, mu1: 0.5, p2: 0.5, mu2: 3.0 }.validate().is_err());
        assert!(EffectLaw::Bhn { p1: -0.1, mu1: 0.5, p2: 0.5, mu2: 3.0 }.validate().is_err());
        assert!(EffectLaw::Bhn { p1: 0.1, mu1: 1.5, p2: 0.5, mu2: 3.0 }.validate().is_err());
        let law = EffectLaw::Bhn { p1: 0.05, mu1: 0.5, p2: 0.18, mu2: 3.53 };
        law.validate().unwrap();
        assert!((law.mean() - 1.4304).abs() < 1e-12);
        law.check_target_mean(3f64.cbrt()).unwrap();
        let low = EffectLaw::Bhn { p1: 0.7, mu1: 0.3, p2: 0.05, mu2: 5.10 };
        low.check_target_mean((1.0f64 / 3.0).cbrt()).unwrap();
    }

    #[test]
    fn laplace_closed_forms() {
        let g = FrailtyLaw::gamma(1.0).unwrap();
        let ig = FrailtyLaw::inverse_gaussian(1.0).unwrap();
        assert_eq!(g.laplace_transform(0.0).unwrap(), 1.0);
        assert_eq!(ig.laplace_transform(0.0).unwrap(), 1.0);
        assert!((g.laplace_transform(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((ig.laplace_transform(1.0).unwrap() - (1.0 - 3f64.sqrt()).exp()).abs() < 1e-15);
        assert!(g.laplace_transform(-1.0).is_err());
    }

    #[test]
    fn laplace_derivative_matches_difference() {
        for law in [FrailtyLaw::Degenerate, FrailtyLaw::Gamma { variance: 2.0 }, FrailtyLaw::InverseGaussian { variance: 0.5 }] {
            for s in [0.1, 1.0, 7.0] {
                let h = 1e-5 * s;
                let fd = (law.laplace_unchecked(s + h) - law.laplace_unchecked(s - h)) / (2.0 * h);
                assert!((fd - law.laplace_derivative(s)).abs() < 1e-8, "{law:?} {s}");
            }
        }
    }

    #[test]
    fn gamma_quantile_inverts_cdf() {
        for shape in [0.24, 0.961, 1.0, 2.08, 4.16, 50.0] {
            for p in [1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-9] {
                let x = gamma_quantile(shape, p);
                let back = gamma_lr(shape, x);
                let err = if p > 0.5 { (gamma_ur(shape, x) - (1.0 - p)).abs() / (1.0 - p) } else { (back - p).abs() / p };
                assert!(err < 1e-9, "shape {shape} p {p} x {x} back {back}");
            }
        }
    }

    #[test]
    fn inverse_gaussian_quantile_inverts_cdf() {
        for shape in [0.5, 1.0, 2.0] {
            for p in [1e-6, 0.1, 0.5, 0.9, 0.999] {
                let x = inverse_gaussian_quantile(1.0, shape, p);
                assert!((inverse_gaussian_cdf(1.0, shape, x) - p).abs() < 1e-10, "{shape} {p}");
            }
        }
    }

    #[test]
    fn bhn_quantile_follows_atom_order() {
        let law = EffectLaw::Bhn { p1: 0.05, mu1: 0.5, p2: 0.18, mu2: 3.53 };
        assert_eq!(law.quantile(0.01), 0.5);
        assert_eq!(law.quantile(0.5), 1.0);
        assert_eq!(law.quantile(0.9), 3.53);
    }

    #[test]
    fn copula_rejects_invalid() {
        assert!(GaussianCopula::new(1.0, 0.0).is_err());
        assert!(matches!(GaussianCopula::new(0.6, 0.6), Err(Error::NotPositiveDefinite(_))));
        // Boundary case used by the confounding experiments.
        GaussianCopula::new(0.5, 0.5).unwrap();
    }

    #[test]
    fn extreme_value_degenerate_scale() {
        let mut rng = StreamSeed(3).rng(0);
        let w = sample_standard_extreme_value(&mut rng);
        assert_eq!((0.0 * w).exp(), 1.0);
    }

    #[test]
    fn hazard_ratio_conversion() {
        let law = EffectLaw::from_hazard_ratio(3.0, 1.0 / 3.0).unwrap();
        assert!((law.mean() - 1.44225).abs() < 1e-5);
    }
}
