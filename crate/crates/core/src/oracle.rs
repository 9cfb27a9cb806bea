//! Ground truth for a configuration: marginal survival curves of the potential
//! outcomes, the causal acceleration factor θ(t) = S_{T⁰}⁻¹(S_{Tᵃ}(t)) / t, its
//! derivative form η(t), the reverse map θ̃, and the moment contrasts that θ
//! identifies under effect homogeneity.
//!
//! Everything here is evaluated analytically or by quadrature; nothing is
//! sampled.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::curve::{AccelCurve, AccelPoint, Grid, Provenance};
use crate::distributions::{gamma_quantile, EffectLaw, FrailtyLaw, PositiveLaw};
use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;
use crate::scm::{Baseline, ScmConfig};

/// A survival function that can be evaluated pointwise and inverted.
pub trait SurvivalFunction {
    fn survival(&self, t: f64) -> f64;

    /// `sup { t >= 0 : S(t) >= p }`.
    fn quantile(&self, p: f64) -> Result<f64>;
}

/// `sup { t >= 0 : S(t) >= p }` for any survival function.
pub fn quantile<S: SurvivalFunction + ?Sized>(s: &S, p: f64) -> Result<f64> {
    s.quantile(p)
}

// Mass of the Gamma effect law left outside the quadrature range, per tail.
const GAMMA_TAIL_MASS: f64 = 1e-13;

#[derive(Clone)]
enum Kind {
    /// Σ_j w_j E[exp(-U0 H_j(t))].
    Frailty { baseline: Baseline, frailty: FrailtyLaw },
    /// Σ w S(c t).
    Scaled { base: Arc<SmoothSurvival>, atoms: Vec<(f64, f64)> },
    /// E[S(t U)] with U ~ Γ(shape, scale), integrated over ln U.
    GammaScaled { base: Arc<SmoothSurvival>, shape: f64, scale: f64, lo: f64, hi: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// Smooth, nonincreasing survival function with `S(0) = 1`.
#[derive(Clone)]
pub struct SmoothSurvival {
    kind: Kind,
    t_hi: f64,
}

impl fmt::Debug for SmoothSurvival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Frailty { .. } => "frailty",
            Kind::Scaled { .. } => "scaled",
            Kind::GammaScaled { .. } => "gamma_scaled",
            Kind::Custom(_) => "custom",
        };
        f.debug_struct("SmoothSurvival").field("kind", &kind).field("t_hi", &self.t_hi).finish()
    }
}

impl SmoothSurvival {
    /// Wraps an arbitrary survival function after checking `S(0) = 1` and
    /// monotonicity on a logarithmic grid spanning `t_hi * [1e-6, 1e4]`.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, t_hi: f64) -> Result<Self> {
        if !(t_hi > 0.0) {
            return Err(invalid("support hint must be positive"));
        }
        if (f(0.0) - 1.0).abs() > 1e-12 {
            return Err(invalid("survival function must equal 1 at t = 0"));
        }
        let mut prev = 1.0;
        for i in 0..=2000 {
            let t = t_hi * 10f64.powf(-6.0 + 10.0 * i as f64 / 2000.0);
            let s = f(t);
            if !(0.0..=1.0).contains(&s) || s > prev + 1e-15 {
                return Err(invalid(format!("survival function is not nonincreasing in [0, 1] at t = {t}")));
            }
            prev = s;
        }
        Ok(SmoothSurvival { kind: Kind::Custom(Arc::new(f)), t_hi })
    }

    /// Mixture of rescaled copies: `t ↦ Σ w S(c t)`.
    pub fn scaled(base: &SmoothSurvival, atoms: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.0).sum();
        if atoms.is_empty() || (total - 1.0).abs() > 1e-9 || atoms.iter().any(|a| !(a.0 >= 0.0 && a.1 > 0.0)) {
            return Err(invalid("scale mixture needs non-negative weights summing to one and positive factors"));
        }
        let cmin = atoms.iter().filter(|a| a.0 > 0.0).map(|a| a.1).fold(f64::INFINITY, f64::min);
        Ok(SmoothSurvival { t_hi: base.t_hi / cmin, kind: Kind::Scaled { base: Arc::new(base.clone()), atoms } })
    }

    pub fn support_hint(&self) -> f64 {
        self.t_hi
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match &self.kind {
            Kind::Frailty { baseline, frailty } => baseline
                .cumulative_hazards(t)
                .into_iter()
                .map(|(w, h)| w * frailty.laplace_unchecked(h))
                .sum(),
            Kind::Scaled { base, atoms } => atoms.iter().map(|(w, c)| w * base.eval(c * t)).sum(),
            Kind::GammaScaled { .. } => self.gamma_mixture(t).0,
            Kind::Custom(f) => f(t),
        }
    }

    /// Value and relative quadrature error estimate.
    fn gamma_mixture(&self, t: f64) -> (f64, f64) {
        let Kind::GammaScaled { base, shape, scale, lo, hi } = &self.kind else {
            return (self.eval(t), 0.0);
        };
        let norm = shape * scale.ln() + ln_gamma(*shape);
        // Density of ln U at x.
        let integrand = |x: f64| base.eval(t * x.exp()) * (shape * x - x.exp() / scale - norm).exp();
        let r = integrate(integrand, *lo, *hi, 1e-14, 1e-12);
        let v = r.value.clamp(0.0, 1.0);
        (v, if r.converged { 0.0 } else { r.abs_error / v.max(1e-300) })
    }

    /// Evaluates and reports quadrature non-convergence.
    pub fn try_eval(&self, t: f64) -> Result<f64> {
        if let Kind::GammaScaled { .. } = self.kind {
            if t > 0.0 {
                let (v, rel) = self.gamma_mixture(t);
                if rel > 1e-6 {
                    return Err(Error::QuadratureNonConvergence { t, change: rel });
                }
                return Ok(v);
            }
        }
        Ok(self.eval(t))
    }
}

impl SurvivalFunction for SmoothSurvival {
    fn survival(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid(format!("quantile level must lie in (0, 1], got {p}")));
        }
        // Bracket [lo, hi] with S(lo) >= p > S(hi), expanding geometrically.
        let mut hi = self.t_hi;
        let mut steps = 0;
        while self.eval(hi) >= p {
            hi *= 2.0;
            steps += 1;
            if steps > 2000 || !hi.is_finite() {
                return Err(Error::BeyondSupport { level: p, infimum: self.eval(f64::MAX) });
            }
        }
        let mut lo = hi / 2.0;
        steps = 0;
        while self.eval(lo) < p {
            hi = lo;
            lo /= 2.0;
            steps += 1;
            if steps > 1100 || lo == 0.0 {
                return Ok(0.0);
            }
        }
        // Geometric bisection to full precision.
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) >= p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// `S_{T⁰}`: the baseline survival averaged over the frailty law.
pub fn survival_control(config: &ScmConfig) -> Result<SmoothSurvival> {
    config.baseline.validate()?;
    config.frailty.validate()?;
    let t_hi = match &config.baseline {
        Baseline::Weibull { sigma, kappa } => (1.0 / kappa).powf(*sigma),
        Baseline::WeibullMixture { components, .. } => components.iter().map(|c| c.scale).fold(0.0, f64::max),
    };
    Ok(SmoothSurvival { kind: Kind::Frailty { baseline: config.baseline.clone(), frailty: config.frailty }, t_hi })
}

/// `S_{T¹}(t) = E_{U1}[S_{T⁰}(t U1)]` for the constant-rate effect.
pub fn survival_treated(config: &ScmConfig) -> Result<SmoothSurvival> {
    config.effect.validate()?;
    let control = survival_control(config)?;
    treated_from_control(&control, &config.effect)
}

pub(crate) fn treated_from_control(control: &SmoothSurvival, effect: &EffectLaw) -> Result<SmoothSurvival> {
    if let Some(atoms) = effect.atoms() {
        let atoms = atoms.into_iter().filter(|a| a.0 > 0.0).collect();
        return SmoothSurvival::scaled(control, atoms);
    }
    let (shape, scale) = effect.gamma_shape_scale().expect("continuous effect law is Gamma");
    let lo = (scale * lower_tail_point(shape, GAMMA_TAIL_MASS)).ln();
    let hi = (scale * gamma_quantile(shape, 1.0 - GAMMA_TAIL_MASS)).ln();
    let s = SmoothSurvival {
        kind: Kind::GammaScaled { base: Arc::new(control.clone()), shape, scale, lo, hi },
        t_hi: control.t_hi / effect.mean(),
    };
    for p in [0.99, 0.9, 0.5, 0.1, 0.01] {
        let t = control.quantile(p)? / effect.mean();
        s.try_eval(t)?;
    }
    Ok(s)
}

// Point below which Γ(shape, 1) has mass `mass`; exact inversion for moderate
// shapes, the small-x expansion when the quantile underflows the solver.
fn lower_tail_point(shape: f64, mass: f64) -> f64 {
    let x = gamma_quantile(shape, mass);
    if x > 0.0 && gamma_lr(shape, x) > 0.0 {
        x
    } else {
        ((mass.ln() + ln_gamma(shape + 1.0)) / shape).exp()
    }
}

fn theta_curve(
    s0: &SmoothSurvival,
    sa: &SmoothSurvival,
    grid: &Grid,
    provenance: Provenance,
) -> Result<AccelCurve> {
    grid.validate()?;
    let points = grid
        .points()
        .iter()
        .map(|&x| -> Result<AccelPoint> {
            let (t, level) = match grid {
                Grid::Times(_) => (x, sa.eval(x)),
                Grid::TreatedCdf(_) => {
                    let level = 1.0 - x;
                    (sa.quantile(level)?, level)
                }
            };
            let q = s0.quantile(level)?;
            Ok(AccelPoint { t, treated_cdf: 1.0 - level, value: Some(q / t), band: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AccelCurve { axis: grid.axis(), provenance, points })
}

/// Causal acceleration factor θ(t) on the grid.
pub fn causal_theta(config: &ScmConfig, grid: &Grid) -> Result<AccelCurve> {
    let s0 = survival_control(config)?;
    let sa = survival_treated(config)?;
    theta_curve(&s0, &sa, grid, Provenance::Oracle)
}

/// θ(t) of an arbitrary pair of smooth survival functions.
pub fn theta_between(s0: &SmoothSurvival, sa: &SmoothSurvival, grid: &Grid) -> Result<AccelCurve> {
    theta_curve(s0, sa, grid, Provenance::Oracle)
}

/// η(t) = d/dt S_{T⁰}⁻¹(S_{Tᵃ}(t)) by Richardson-extrapolated central differences.
pub fn causal_eta(config: &ScmConfig, grid: &Grid) -> Result<AccelCurve> {
    let s0 = survival_control(config)?;
    let sa = survival_treated(config)?;
    let theta = theta_curve(&s0, &sa, grid, Provenance::Oracle)?;
    let q = |t: f64| s0.quantile(sa.eval(t));
    let points = theta
        .points
        .iter()
        .map(|p| -> Result<AccelPoint> {
            let t = p.t;
            let h = (1e-4 * t).max(1e-6);
            if t - h <= 0.0 {
                return Err(Error::GridTooCoarse(t));
            }
            let central = |h: f64| -> Result<f64> { Ok((q(t + h)? - q(t - h)?) / (2.0 * h)) };
            let d1 = central(h)?;
            let d2 = central(h / 2.0)?;
            Ok(AccelPoint { value: Some((4.0 * d2 - d1) / 3.0), ..*p })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AccelCurve { points, ..theta })
}

/// Reverse map θ̃(s) = S_{Tᵃ}⁻¹(S_{T⁰}(s)) / s.
///
/// On a CDF grid the levels refer to the control distribution: the point at
/// level `c` sits at `s = S_{T⁰}⁻¹(1 - c)`.
pub fn reverse_theta(config: &ScmConfig, grid: &Grid) -> Result<AccelCurve> {
    let s0 = survival_control(config)?;
    let sa = survival_treated(config)?;
    let mut curve = theta_curve(&sa, &s0, grid, Provenance::Oracle)?;
    for p in &mut curve.points {
        // theta_curve labels its CDF column with the second argument (here S_{T⁰}).
        p.treated_cdf = 1.0 - sa.eval(p.t * p.value.unwrap_or(1.0));
    }
    Ok(curve)
}

/// Conditional causal acceleration factor `θ_c(u1, t) = exp f1(u1, a)` for the
/// constant-rate model: `u1` for the treated, one for the untreated, at every t.
pub fn conditional_theta(effect: &EffectLaw, u1: f64, a: u8, t: f64) -> Result<f64> {
    effect.validate()?;
    if !(u1 > 0.0) {
        return Err(invalid(format!("effect value must be positive, got {u1}")));
    }
    if !(t > 0.0) {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    Ok(if a == 0 { 1.0 } else { u1 })
}

/// A moment computed by quadrature, flagged when the integral diverges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    /// Value, or the truncated integral at the horizon when `divergent`.
    pub value: f64,
    pub divergent: bool,
    /// Tail index α of `S(t) ~ t^{-α}` estimated at the horizon.
    pub tail_index: f64,
    pub horizon: f64,
}

/// Survival level at which moment integrals are truncated.
pub const MOMENT_HORIZON_LEVEL: f64 = 1e-9;

fn tail(s: &SmoothSurvival) -> Result<(f64, f64)> {
    let horizon = s.quantile(MOMENT_HORIZON_LEVEL)?;
    let inner = s.quantile(10.0 * MOMENT_HORIZON_LEVEL)?;
    let alpha = std::f64::consts::LN_10 / (horizon / inner).ln();
    Ok((horizon, alpha))
}

/// `E[T] = ∫ S(t) dt`, with a power-law tail correction beyond the horizon.
pub fn mean_time(s: &SmoothSurvival) -> Result<Moment> {
    let (horizon, alpha) = tail(s)?;
    let xh = horizon.ln();
    let body = integrate(|x| s.eval(x.exp()) * x.exp(), xh - 60.0, xh, 1e-300, 1e-12).value;
    let divergent = alpha <= 1.0 + 1e-3;
    let value = if divergent { body } else { body + horizon * s.eval(horizon) / (alpha - 1.0) };
    Ok(Moment { value, divergent, tail_index: alpha, horizon })
}

/// `E[log T] = ∫_1^∞ S(t)/t dt - ∫_0^1 (1 - S(t))/t dt`.
pub fn mean_log_time(s: &SmoothSurvival) -> Result<Moment> {
    let (horizon, alpha) = tail(s)?;
    let xh = horizon.ln();
    let lower = -60.0 + xh.min(0.0);
    let neg = integrate(|x| 1.0 - s.eval(x.exp()), lower, xh.min(0.0), 1e-15, 1e-12).value;
    let mid = if xh < 0.0 { -xh } else { 0.0 }; // S - 1 on [xh, 0] when the horizon is below 1
    let pos = if xh > 0.0 { integrate(|x| s.eval(x.exp()), 0.0, xh, 1e-15, 1e-12).value } else { 0.0 };
    let divergent = alpha <= 1e-3;
    let tail_part = if divergent { 0.0 } else { s.eval(horizon) / alpha };
    Ok(Moment { value: pos - neg - mid + tail_part, divergent, tail_index: alpha, horizon })
}

/// Moment contrasts identified by θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Contrasts {
    /// `E[log Tᵃ] - E[log T⁰]`.
    pub log_diff: f64,
    /// `E[Tᵃ] / E[T⁰]`.
    pub mean_ratio: f64,
    pub log_diff_divergent: bool,
    pub mean_ratio_divergent: bool,
}

impl Lemma1Contrasts {
    /// `E[T⁰] / E[Tᵃ]`, zero when the treated mean diverges.
    pub fn inverse_mean_ratio(&self) -> f64 {
        if self.mean_ratio_divergent {
            0.0
        } else {
            1.0 / self.mean_ratio
        }
    }

    /// `exp(E[log T⁰] - E[log Tᵃ])`.
    pub fn log_contrast(&self) -> f64 {
        (-self.log_diff).exp()
    }
}

pub fn lemma1_contrasts(config: &ScmConfig) -> Result<Lemma1Contrasts> {
    let s0 = survival_control(config)?;
    let sa = survival_treated(config)?;
    let (m0, ma) = (mean_time(&s0)?, mean_time(&sa)?);
    let (l0, la) = (mean_log_time(&s0)?, mean_log_time(&sa)?);
    Ok(Lemma1Contrasts {
        log_diff: la.value - l0.value,
        mean_ratio: ma.value / m0.value,
        log_diff_divergent: l0.divergent || la.divergent,
        mean_ratio_divergent: m0.divergent || ma.divergent,
    })
}

/// θ(t) of `S¹(t) = Σ w S⁰(c t)` against `S⁰`.
pub fn mixture_theta(s0: &SmoothSurvival, factors: &[(f64, f64)], grid: &Grid) -> Result<AccelCurve> {
    let s1 = SmoothSurvival::scaled(s0, factors.to_vec())?;
    theta_curve(s0, &s1, grid, Provenance::Oracle)
}

/// Gamma-law helper used in tests and reports: mass of Γ(shape, scale) above `x`.
pub fn gamma_upper_tail(shape: f64, scale: f64, x: f64) -> f64 {
    gamma_ur(shape, x / scale)
}

/// Hazard `-d/dt log S(t)`: analytic for frailty-averaged baselines, central
/// differences otherwise.
pub fn hazard(s: &SmoothSurvival, t: f64) -> f64 {
    if let Kind::Frailty { baseline, frailty } = &s.kind {
        let shape = match baseline {
            Baseline::Weibull { sigma, .. } => 1.0 / sigma,
            Baseline::WeibullMixture { shape, .. } => *shape,
        };
        let density: f64 = baseline
            .cumulative_hazards(t)
            .into_iter()
            .map(|(w, h)| -w * frailty.laplace_derivative(h) * shape * h / t)
            .sum();
        return density / s.eval(t);
    }
    let h = 1e-5 * t;
    -((s.eval(t + h)).ln() - (s.eval(t - h)).ln()) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::presets;

    fn table1_gamma1() -> ScmConfig {
        presets::table1(FrailtyLaw::Gamma { variance: 1.0 }, 3.0)
    }

    #[test]
    fn control_survival_gamma_closed_form() {
        let s0 = survival_control(&table1_gamma1()).unwrap();
        assert_eq!(s0.eval(0.0), 1.0);
        for t in [0.5, 2.0, 4.0, 6.0, 20.0] {
            let expected = 1.0 / (1.0 + t * t * t / 60.0);
            assert!((s0.eval(t) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_frailty_median() {
        let s0 = survival_control(&presets::table1(FrailtyLaw::Degenerate, 3.0)).unwrap();
        let m = (60.0 * 2f64.ln()).cbrt();
        assert!((s0.eval(m) - 0.5).abs() < 1e-14);
        assert!((s0.quantile(0.5).unwrap() - m).abs() < 1e-12);
    }

    #[test]
    fn exponential_quantile() {
        let s = SmoothSurvival::custom(|t: f64| (-t).exp(), 1.0).unwrap();
        assert!((s.quantile(0.5).unwrap() - 2f64.ln()).abs() < 1e-14);
        // Only rounding in exp(-t) keeps S at exactly 1 beyond t = 0.
        assert!(s.quantile(1.0).unwrap() < 1e-15);
        assert!(s.quantile(0.0).is_err());
        assert!(s.quantile(1.5).is_err());
    }

    #[test]
    fn beyond_support_signalled() {
        let s = SmoothSurvival::custom(|t: f64| 0.5 + 0.5 * (-t).exp(), 1.0).unwrap();
        assert!(matches!(s.quantile(0.4), Err(Error::BeyondSupport { .. })));
        assert!(s.quantile(0.6).is_ok());
    }

    #[test]
    fn custom_rejects_increasing() {
        assert!(SmoothSurvival::custom(|t: f64| if t < 1.0 { 1.0 - 0.5 * t } else { 0.6 }, 1.0).is_err());
        assert!(SmoothSurvival::custom(|t: f64| 0.9 * (-t).exp(), 1.0).is_err());
    }

    #[test]
    fn homogeneous_theta_table_values() {
        let grid = Grid::Times(vec![0.5, 1.0, 3.0, 8.0, 30.0]);
        for (hr, expected) in [(3.0f64, 1.442), (1.0 / 3.0, 0.693)] {
            for frailty in [FrailtyLaw::Gamma { variance: 2.0 }, FrailtyLaw::InverseGaussian { variance: 0.5 }] {
                let c = causal_theta(&presets::table1(frailty, hr), &grid).unwrap();
                for v in c.values() {
                    assert!((v.unwrap() - expected).abs() < 5e-4);
                    assert!((v.unwrap() - hr.powf(1.0 / 3.0)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn null_effect_theta_is_one() {
        let cfg = presets::fig2_left(EffectLaw::null());
        let c = causal_theta(&cfg, &Grid::cdf_levels(0.05, 0.95, 7)).unwrap();
        assert!(c.values().iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-12));
        let e = causal_eta(&cfg, &Grid::Times(vec![1.0, 2.0, 5.0])).unwrap();
        assert!(e.values().iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-8));
        let r = reverse_theta(&cfg, &Grid::Times(vec![1.0, 2.0, 5.0])).unwrap();
        assert!(r.values().iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bhn_treated_survival_is_atom_mixture() {
        let cfg = presets::fig2_left(presets::bhn_high());
        let s0 = survival_control(&cfg).unwrap();
        let s1 = survival_treated(&cfg).unwrap();
        for t in [0.5, 1.0, 2.0, 4.0, 9.0] {
            let expect = 0.05 * s0.eval(0.5 * t) + 0.18 * s0.eval(3.53 * t) + 0.77 * s0.eval(t);
            assert!((s1.eval(t) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn conditional_theta_constant_rate() {
        let law = presets::bhn_high();
        for t in [0.1, 1.0, 10.0] {
            assert_eq!(conditional_theta(&law, 3.53, 1, t).unwrap(), 3.53);
            assert_eq!(conditional_theta(&law, 3.53, 0, t).unwrap(), 1.0);
        }
        let homo = EffectLaw::from_hazard_ratio(3.0, 1.0 / 3.0).unwrap();
        let EffectLaw::Degenerate { factor } = homo else { unreachable!() };
        assert!((conditional_theta(&homo, factor, 1, 2.0).unwrap() - 1.442).abs() < 5e-4);
        assert!(conditional_theta(&law, 1.0, 1, 0.0).is_err());
    }

    #[test]
    fn gamma_effect_mixture_matches_direct_integration() {
        // Independent check: integrate over u rather than ln u with a plain
        // composite Simpson rule on a fine grid.
        let cfg = presets::fig2_left(presets::gamma_effect(3f64.cbrt(), 1.0));
        let s0 = survival_control(&cfg).unwrap();
        let s1 = survival_treated(&cfg).unwrap();
        let (k, sc) = cfg.effect.gamma_shape_scale().unwrap();
        let dens = |u: f64| ((k - 1.0) * u.ln() - u / sc - k * sc.ln() - ln_gamma(k)).exp();
        for t in [0.5, 2.0, 6.0] {
            let n = 200_000;
            let hi = 40.0;
            let h = hi / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let u = i as f64 * h;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let f = if u == 0.0 { 0.0 } else { s0.eval(t * u) * dens(u) };
                acc += w * f;
            }
            let simpson = acc * h / 3.0;
            assert!((s1.eval(t) - simpson).abs() < 1e-7, "t={t}: {} vs {simpson}", s1.eval(t));
        }
    }

    #[test]
    fn homogeneous_moment_contrasts() {
        for frailty in [FrailtyLaw::Gamma { variance: 2.0 }, FrailtyLaw::InverseGaussian { variance: 1.0 }] {
            for hr in [3.0f64, 1.0 / 3.0] {
                let theta = hr.powf(1.0 / 3.0);
                let c = lemma1_contrasts(&presets::table1(frailty, hr)).unwrap();
                assert!((c.mean_ratio - 1.0 / theta).abs() < 1e-6, "{c:?}");
                assert!((c.log_diff + theta.ln()).abs() < 1e-6, "{c:?}");
                assert!(!c.mean_ratio_divergent && !c.log_diff_divergent);
            }
        }
    }

    #[test]
    fn null_effect_moment_contrasts() {
        let c = lemma1_contrasts(&presets::fig2_right(EffectLaw::null())).unwrap();
        assert!(c.log_diff.abs() < 1e-12);
        assert!((c.mean_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_time_of_exponential() {
        let s = SmoothSurvival::custom(|t: f64| (-t / 3.0).exp(), 3.0).unwrap();
        let m = mean_time(&s).unwrap();
        assert!((m.value - 3.0).abs() < 1e-8, "{m:?}");
        // E[log T] = log 3 - γ for an exponential with mean 3.
        let l = mean_log_time(&s).unwrap();
        assert!((l.value - (3f64.ln() - 0.577_215_664_901_532_9)).abs() < 1e-8, "{l:?}");
    }

    #[test]
    fn mixture_single_factor() {
        let s0 = SmoothSurvival::custom(|t: f64| (-(t / 200.0).powi(2)).exp(), 200.0).unwrap();
        let c = mixture_theta(&s0, &[(1.0, 0.7)], &Grid::Times(vec![10.0, 100.0, 300.0])).unwrap();
        assert!(c.values().iter().all(|v| (v.unwrap() - 0.7).abs() < 1e-12));
        assert!(mixture_theta(&s0, &[(0.4, 0.7), (0.4, 0.5)], &Grid::Times(vec![1.0])).is_err());
    }
}
