//! Cohort generation from the constant-rate structural causal AFT model
//!
//! ```text
//! A    := f_A(N_A)
//! T⁰   := baseline(U0, W)          (log-linear Weibull or Weibull mixture)
//! Tᵃ   := T⁰ / U1^a
//! ```
//!
//! with optional independent censoring and, for observational designs, a
//! measured confounder `L ~ Uniform(0, 1)` tied to `(U0, U1)` through a
//! Gaussian copula and driving treatment via `P(A = 1 | L) = 0.5 + β_LA (2L - 1)`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_standard_extreme_value, EffectLaw, FrailtyLaw, GaussianCopula, PositiveLaw};
use crate::error::{invalid, Result};
use crate::rng::{StreamSeed, CENSORING_STREAM, LATENT_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub scale: f64,
}

/// Distribution of `T⁰` given the frailty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    /// `log T⁰ = -σ log κ - σ log U0 + σ W`; cumulative hazard `U0 κ t^{1/σ}`.
    Weibull { sigma: f64, kappa: f64 },
    /// Finite mixture of Weibull laws with common shape; component `j` has
    /// cumulative hazard `U0 (t / scale_j)^shape`.
    WeibullMixture { shape: f64, components: Vec<MixtureComponent> },
}

impl Baseline {
    pub fn validate(&self) -> Result<()> {
        match self {
            Baseline::Weibull { sigma, kappa } => {
                if !(*sigma > 0.0 && *kappa > 0.0 && sigma.is_finite() && kappa.is_finite()) {
                    return Err(invalid(format!("Weibull baseline needs sigma, kappa > 0 (got {sigma}, {kappa})")));
                }
            }
            Baseline::WeibullMixture { shape, components } => {
                if !(*shape > 0.0) || components.is_empty() {
                    return Err(invalid("Weibull mixture needs a positive shape and at least one component"));
                }
                if components.iter().any(|c| !(c.weight > 0.0 && c.scale > 0.0)) {
                    return Err(invalid("mixture weights and scales must be positive"));
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("mixture weights sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// Baseline cumulative hazard for a unit frailty, per component.
    pub(crate) fn cumulative_hazards(&self, t: f64) -> Vec<(f64, f64)> {
        match self {
            Baseline::Weibull { sigma, kappa } => vec![(1.0, kappa * t.powf(1.0 / sigma))],
            Baseline::WeibullMixture { shape, components } => {
                components.iter().map(|c| (c.weight, (t / c.scale).powf(*shape))).collect()
            }
        }
    }

    fn event_time(&self, u0: f64, w: f64, component_u: f64) -> f64 {
        match self {
            Baseline::Weibull { sigma, kappa } => (sigma * (w - kappa.ln() - u0.ln())).exp(),
            Baseline::WeibullMixture { shape, components } => {
                let mut acc = 0.0;
                let mut scale = components[components.len() - 1].scale;
                for c in components {
                    acc += c.weight;
                    if component_u < acc {
                        scale = c.scale;
                        break;
                    }
                }
                scale * ((w - u0.ln()) / shape).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreatmentSpec {
    Randomized { p_treat: f64 },
    Confounded { beta_la: f64, tau0: f64, tau1: f64 },
}

impl TreatmentSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TreatmentSpec::Randomized { p_treat } => {
                if !(p_treat > 0.0 && p_treat < 1.0) {
                    return Err(invalid(format!("p_treat must lie in (0, 1), got {p_treat}")));
                }
            }
            TreatmentSpec::Confounded { beta_la, tau0, tau1 } => {
                if !(0.0..=0.5).contains(&beta_la) {
                    return Err(invalid(format!("beta_LA must lie in [0, 0.5], got {beta_la}")));
                }
                GaussianCopula::new(tau0, tau1)?;
            }
        }
        Ok(())
    }

    /// `P(A = 1 | L = l)` for the confounded design.
    pub fn propensity(&self, l: Option<f64>) -> f64 {
        match (*self, l) {
            (TreatmentSpec::Randomized { p_treat }, _) => p_treat,
            (TreatmentSpec::Confounded { beta_la, .. }, Some(l)) => 0.5 + beta_la * (2.0 * l - 1.0),
            (TreatmentSpec::Confounded { .. }, None) => 0.5,
        }
    }
}

/// Independent censoring: administrative follow-up and/or exponential
/// dropout. Both compose by minimum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CensoringSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follow_up: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponential_mean: Option<f64>,
}

impl CensoringSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn administrative(t_max: f64) -> Self {
        CensoringSpec { follow_up: Some(t_max), exponential_mean: None }
    }

    pub fn exponential(mean: f64) -> Self {
        CensoringSpec { follow_up: None, exponential_mean: Some(mean) }
    }

    pub fn both(t_max: f64, mean: f64) -> Self {
        CensoringSpec { follow_up: Some(t_max), exponential_mean: Some(mean) }
    }

    pub fn is_none(&self) -> bool {
        self.follow_up.is_none() && self.exponential_mean.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.exponential_mean {
            if !(m > 0.0 && m.is_finite()) {
                return Err(invalid(format!("censoring mean must be positive, got {m}")));
            }
        }
        if let Some(h) = self.follow_up {
            if !(h >= 0.0) {
                return Err(invalid(format!("follow-up horizon must be non-negative, got {h}")));
            }
            if h == 0.0 {
                log::warn!("follow-up horizon is zero: every record will be censored");
            }
        }
        Ok(())
    }
}

/// Full description of a data-generating mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmConfig {
    pub baseline: Baseline,
    pub frailty: FrailtyLaw,
    pub effect: EffectLaw,
    pub treatment: TreatmentSpec,
    #[serde(default)]
    pub censoring: CensoringSpec,
}

impl ScmConfig {
    pub fn validate(&self) -> Result<()> {
        self.baseline.validate()?;
        self.frailty.validate()?;
        self.effect.validate()?;
        self.treatment.validate()?;
        self.censoring.validate()
    }

    pub fn with_censoring(mut self, censoring: CensoringSpec) -> Self {
        self.censoring = censoring;
        self
    }

    pub fn with_treatment(mut self, treatment: TreatmentSpec) -> Self {
        self.treatment = treatment;
        self
    }

    pub fn is_confounded(&self) -> bool {
        matches!(self.treatment, TreatmentSpec::Confounded { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortRecord {
    pub u0: f64,
    /// Individual time-scale factor `exp f1(U1, 1)`.
    pub u1: f64,
    pub l: Option<f64>,
    pub a: u8,
    pub t0: f64,
    pub ta: f64,
    pub t_obs: f64,
    pub d: bool,
}

impl CohortRecord {
    /// Factual event time `T = T^A`.
    pub fn factual_time(&self) -> f64 {
        if self.a == 1 {
            self.ta
        } else {
            self.t0
        }
    }
}

/// Immutable cohort. Latent columns are always populated; [`Dataset::observed`]
/// gives the view an analyst would see.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<CohortRecord>,
}

/// Observed projection of a record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub l: Option<f64>,
    pub a: u8,
    pub t_obs: f64,
    pub d: bool,
}

impl Dataset {
    pub fn new(records: Vec<CohortRecord>) -> Self {
        Dataset { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn arm(&self, a: u8) -> impl Iterator<Item = &CohortRecord> + '_ {
        self.records.iter().filter(move |r| r.a == a)
    }

    pub fn observed(&self) -> impl Iterator<Item = Observation> + '_ {
        self.records.iter().map(|r| Observation { l: r.l, a: r.a, t_obs: r.t_obs, d: r.d })
    }

    pub fn has_confounder(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.l.is_some())
    }

    pub fn censored_count(&self) -> usize {
        self.records.iter().filter(|r| !r.d).count()
    }

    /// Records at the given indices (bootstrap resampling).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset { records: indices.iter().map(|&i| self.records[i]).collect() }
    }
}

/// Draws `n` i.i.d. records. Confounded configurations are delegated to
/// [`generate_confounded_cohort`].
pub fn generate_cohort(config: &ScmConfig, n: usize, seed: StreamSeed) -> Result<Dataset> {
    config.validate()?;
    if n == 0 {
        return Err(invalid("cohort size must be at least 1"));
    }
    let p_treat = match config.treatment {
        TreatmentSpec::Randomized { p_treat } => p_treat,
        TreatmentSpec::Confounded { .. } => return generate_confounded_cohort(config, n, seed),
    };
    let frailty = config.frailty.sampler()?;
    let effect = config.effect.sampler()?;
    let mut rng = seed.rng(LATENT_STREAM);
    let mixture = matches!(config.baseline, Baseline::WeibullMixture { .. });
    let records = (0..n)
        .map(|_| {
            let u0 = frailty.sample(&mut rng);
            let u1 = effect.sample(&mut rng);
            let w = sample_standard_extreme_value(&mut rng);
            let cu: f64 = if mixture { rng.random() } else { 0.0 };
            let a = u8::from(rng.random::<f64>() < p_treat);
            latent_record(&config.baseline, u0, u1, None, a, w, cu)
        })
        .collect();
    apply_censoring(&Dataset { records }, &config.censoring, seed)
}

/// Draws `n` records with `(L, U0, U1)` from the Gaussian copula and
/// treatment assigned by `P(A = 1 | L) = 0.5 + β_LA (2L - 1)`.
pub fn generate_confounded_cohort(config: &ScmConfig, n: usize, seed: StreamSeed) -> Result<Dataset> {
    config.validate()?;
    if n == 0 {
        return Err(invalid("cohort size must be at least 1"));
    }
    let TreatmentSpec::Confounded { beta_la, tau0, tau1 } = config.treatment else {
        return Err(invalid("generate_confounded_cohort needs a confounded treatment specification"));
    };
    let copula = GaussianCopula::new(tau0, tau1)?;
    let mut rng = seed.rng(LATENT_STREAM);
    let mixture = matches!(config.baseline, Baseline::WeibullMixture { .. });
    let records = (0..n)
        .map(|_| {
            let [ul, v0, v1] = copula.sample(&mut rng);
            let u0 = config.frailty.quantile(v0);
            let u1 = config.effect.quantile(v1);
            let w = sample_standard_extreme_value(&mut rng);
            let cu: f64 = if mixture { rng.random() } else { 0.0 };
            let p = 0.5 + beta_la * (2.0 * ul - 1.0);
            let a = u8::from(rng.random::<f64>() < p);
            latent_record(&config.baseline, u0, u1, Some(ul), a, w, cu)
        })
        .collect();
    apply_censoring(&Dataset { records }, &config.censoring, seed)
}

fn latent_record(baseline: &Baseline, u0: f64, u1: f64, l: Option<f64>, a: u8, w: f64, cu: f64) -> CohortRecord {
    let t0 = baseline.event_time(u0, w, cu);
    let ta = t0 / u1;
    let t = if a == 1 { ta } else { t0 };
    CohortRecord { u0, u1, l, a, t0, ta, t_obs: t, d: true }
}

/// Recomputes `(T̃, D)` from the factual times under `spec`.
///
/// Censoring times come from their own substream of `seed`, so the same seed
/// with different specs censors the same latent cohort.
pub fn apply_censoring(dataset: &Dataset, spec: &CensoringSpec, seed: StreamSeed) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seed.rng(CENSORING_STREAM);
    let dropout = spec.exponential_mean.map(|m| Exp::new(1.0 / m)).transpose().map_err(|e| invalid(e.to_string()))?;
    let horizon = spec.follow_up.unwrap_or(f64::INFINITY);
    let records = dataset
        .records
        .iter()
        .map(|r| {
            let t = r.factual_time();
            let c = dropout.as_ref().map_or(f64::INFINITY, |e| e.sample(&mut rng)).min(horizon);
            CohortRecord { t_obs: t.min(c), d: t <= c, ..*r }
        })
        .collect();
    Ok(Dataset { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::presets;

    #[test]
    fn null_effect_gives_equal_potential_outcomes() {
        let cfg = presets::table1(FrailtyLaw::Gamma { variance: 1.0 }, 1.0);
        let ds = generate_cohort(&cfg, 1000, StreamSeed(1)).unwrap();
        assert!(ds.records.iter().all(|r| r.ta == r.t0));
    }

    #[test]
    fn no_censoring_observes_factual_time() {
        let cfg = presets::fig2_left(presets::bhn_high());
        let ds = generate_cohort(&cfg, 2000, StreamSeed(2)).unwrap();
        for r in &ds.records {
            assert!(r.d);
            assert_eq!(r.t_obs, if r.a == 1 { r.ta } else { r.t0 });
            assert_eq!(r.ta < r.t0, r.u1 > 1.0);
        }
    }

    #[test]
    fn zero_horizon_censors_everything() {
        let cfg = presets::table1(FrailtyLaw::Degenerate, 3.0).with_censoring(CensoringSpec::administrative(0.0));
        let ds = generate_cohort(&cfg, 500, StreamSeed(3)).unwrap();
        assert_eq!(ds.censored_count(), 500);
    }

    #[test]
    fn censoring_never_exceeds_event_time() {
        let cfg = presets::table1(FrailtyLaw::Gamma { variance: 1.0 }, 3.0)
            .with_censoring(CensoringSpec::both(6.0, 5.0));
        let ds = generate_cohort(&cfg, 5000, StreamSeed(4)).unwrap();
        for r in &ds.records {
            assert!(r.t_obs <= r.factual_time());
            assert!(r.t_obs <= 6.0);
            assert_eq!(r.d, r.t_obs == r.factual_time());
        }
        assert!(ds.censored_count() > 0);
    }

    #[test]
    fn latent_columns_do_not_depend_on_censoring() {
        let base = presets::table1(FrailtyLaw::Gamma { variance: 0.5 }, 3.0);
        let a = generate_cohort(&base, 300, StreamSeed(9)).unwrap();
        let b = generate_cohort(&base.clone().with_censoring(CensoringSpec::exponential(2.0)), 300, StreamSeed(9)).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!((x.u0, x.u1, x.a, x.t0, x.ta), (y.u0, y.u1, y.a, y.t0, y.ta));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = presets::table1(FrailtyLaw::Degenerate, 3.0);
        cfg.baseline = Baseline::Weibull { sigma: 0.0, kappa: 1.0 };
        assert!(generate_cohort(&cfg, 10, StreamSeed(0)).is_err());
        let cfg = presets::table1(FrailtyLaw::Degenerate, 3.0).with_treatment(TreatmentSpec::Randomized { p_treat: 1.0 });
        assert!(cfg.validate().is_err());
        let cfg = presets::table1(FrailtyLaw::Degenerate, 3.0)
            .with_treatment(TreatmentSpec::Confounded { beta_la: 0.6, tau0: 0.0, tau1: 0.0 });
        assert!(cfg.validate().is_err());
        assert!(CensoringSpec::exponential(0.0).validate().is_err());
        assert!(CensoringSpec::administrative(-1.0).validate().is_err());
        let cfg = presets::table1(FrailtyLaw::Degenerate, 3.0);
        assert!(generate_confounded_cohort(&cfg, 10, StreamSeed(0)).is_err());
        assert!(generate_cohort(&cfg, 0, StreamSeed(0)).is_err());
    }

    #[test]
    fn confounded_cohort_has_confounder() {
        let cfg = presets::fig5(0.25, 0.5, 0.0);
        let ds = generate_cohort(&cfg, 1000, StreamSeed(5)).unwrap();
        assert!(ds.has_confounder());
        assert!(ds.records.iter().all(|r| (0.0..1.0).contains(&r.l.unwrap())));
    }
}

pub mod presets {
    //! Configurations of the published simulation designs.

    use super::*;

    pub const TABLE1_SIGMA: f64 = 1.0 / 3.0;
    pub const TABLE1_KAPPA: f64 = 1.0 / 60.0;

    pub fn weibull_baseline() -> Baseline {
        Baseline::Weibull { sigma: TABLE1_SIGMA, kappa: TABLE1_KAPPA }
    }

    /// `T⁰ ~ Weibull(Λ, 2)` with `Λ = X / Γ(3/2)`, `X ∈ {1, 10}` equiprobable.
    pub fn weibull_mixture_baseline() -> Baseline {
        let g = std::f64::consts::PI.sqrt() / 2.0;
        Baseline::WeibullMixture {
            shape: 2.0,
            components: vec![
                MixtureComponent { weight: 0.5, scale: 1.0 / g },
                MixtureComponent { weight: 0.5, scale: 10.0 / g },
            ],
        }
    }

    /// Hazard `κ/σ t^{1/σ-1} U0 e^{βa}` with `e^β = hazard_ratio`, 1:1 randomisation.
    pub fn table1(frailty: FrailtyLaw, hazard_ratio: f64) -> ScmConfig {
        ScmConfig {
            baseline: weibull_baseline(),
            frailty,
            effect: EffectLaw::from_hazard_ratio(hazard_ratio, TABLE1_SIGMA).expect("positive hazard ratio"),
            treatment: TreatmentSpec::Randomized { p_treat: 0.5 },
            censoring: CensoringSpec::none(),
        }
    }

    /// BHN law with mean close to 3^{1/3}.
    pub fn bhn_high() -> EffectLaw {
        EffectLaw::Bhn { p1: 0.05, mu1: 0.5, p2: 0.18, mu2: 3.53 }
    }

    /// BHN law with mean close to (1/3)^{1/3}.
    pub fn bhn_low() -> EffectLaw {
        EffectLaw::Bhn { p1: 0.7, mu1: 0.3, p2: 0.05, mu2: 5.10 }
    }

    pub fn gamma_effect(mean: f64, variance: f64) -> EffectLaw {
        EffectLaw::Gamma { mean, variance }
    }

    /// Gamma(1, 1) frailty, Weibull baseline, heterogeneous effect.
    pub fn fig2_left(effect: EffectLaw) -> ScmConfig {
        ScmConfig {
            baseline: weibull_baseline(),
            frailty: FrailtyLaw::Gamma { variance: 1.0 },
            effect,
            treatment: TreatmentSpec::Randomized { p_treat: 0.5 },
            censoring: CensoringSpec::none(),
        }
    }

    /// Weibull-mixture baseline without frailty.
    pub fn fig2_right(effect: EffectLaw) -> ScmConfig {
        ScmConfig {
            baseline: weibull_mixture_baseline(),
            frailty: FrailtyLaw::Degenerate,
            effect,
            treatment: TreatmentSpec::Randomized { p_treat: 0.5 },
            censoring: CensoringSpec::none(),
        }
    }

    /// Confounded variant of [`fig2_left`] with the high BHN law.
    pub fn fig5(beta_la: f64, tau0: f64, tau1: f64) -> ScmConfig {
        fig2_left(bhn_high()).with_treatment(TreatmentSpec::Confounded { beta_la, tau0, tau1 })
    }
}
