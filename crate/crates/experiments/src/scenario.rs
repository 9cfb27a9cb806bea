//! Scenario registry: one scenario per exhibit tag, with defaults that a TOML
//! file or command-line flags may override.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Exhibit {
    #[serde(rename = "table1a")]
    Table1a,
    #[serde(rename = "table1b")]
    Table1b,
    #[serde(rename = "fig1")]
    Fig1,
    #[serde(rename = "fig2L")]
    Fig2L,
    #[serde(rename = "fig2R")]
    Fig2R,
    #[serde(rename = "fig3")]
    Fig3,
    #[serde(rename = "fig5")]
    Fig5,
    #[serde(rename = "figA1")]
    FigA1,
    #[serde(rename = "figA2")]
    FigA2,
    #[serde(rename = "figA3")]
    FigA3,
    #[serde(rename = "suppTable")]
    SuppTable,
    #[serde(rename = "caseMixture")]
    CaseMixture,
}

impl Exhibit {
    pub const ALL: [Exhibit; 12] = [
        Exhibit::Table1a,
        Exhibit::Table1b,
        Exhibit::Fig1,
        Exhibit::Fig2L,
        Exhibit::Fig2R,
        Exhibit::Fig3,
        Exhibit::Fig5,
        Exhibit::FigA1,
        Exhibit::FigA2,
        Exhibit::FigA3,
        Exhibit::SuppTable,
        Exhibit::CaseMixture,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Exhibit::Table1a => "table1a",
            Exhibit::Table1b => "table1b",
            Exhibit::Fig1 => "fig1",
            Exhibit::Fig2L => "fig2L",
            Exhibit::Fig2R => "fig2R",
            Exhibit::Fig3 => "fig3",
            Exhibit::Fig5 => "fig5",
            Exhibit::FigA1 => "figA1",
            Exhibit::FigA2 => "figA2",
            Exhibit::FigA3 => "figA3",
            Exhibit::SuppTable => "suppTable",
            Exhibit::CaseMixture => "caseMixture",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Exhibit::Table1a => "Observed acceleration factor vs marginal Cox hazard ratio, hazard ratio 1/3 (θ = 0.693)",
            Exhibit::Table1b => "Observed acceleration factor vs marginal Cox hazard ratio, hazard ratio 3 (θ = 1.442)",
            Exhibit::Fig1 => "Censoring and follow-up sensitivity of θ̂_m and the Cox estimate",
            Exhibit::Fig2L => "θ under benefit-harm-neutral effect heterogeneity, Gamma-frailty Weibull baseline",
            Exhibit::Fig2R => "θ under benefit-harm-neutral effect heterogeneity, two-component Weibull mixture baseline",
            Exhibit::Fig3 => "θ under Gamma-distributed effect heterogeneity of increasing variance",
            Exhibit::Fig5 => "Confounding through L: θ_m, θ_adj and θ for three copula settings",
            Exhibit::FigA1 => "Confounding grid: β_LA × τ0 with τ1 = 0",
            Exhibit::FigA2 => "Confounding grid: β_LA × τ1 with τ0 = 0",
            Exhibit::FigA3 => "Confounding grid: β_LA × τ0 with τ1 = τ0",
            Exhibit::SuppTable => "Moment contrasts E[T⁰]/E[T¹] and exp(E log T⁰ - E log T¹) for every design",
            Exhibit::CaseMixture => "θ induced by the scale mixture S¹(t) = 0.5 S⁰(0.9 t) + 0.5 S⁰(0.45 t)",
        }
    }
}

impl fmt::Display for Exhibit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Exhibit {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Exhibit::ALL
            .into_iter()
            .find(|e| e.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| CliError::Usage(format!("unknown scenario {s:?}; run `aftsim list`")))
    }
}

/// Effective settings of one run. Serialized into the manifest and hashed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub exhibit: Exhibit,
    pub n_obs: usize,
    pub n_sim: usize,
    pub seed: u64,
    /// Administrative follow-up horizons as multiples of the control median
    /// (fig1; `0` means no horizon).
    pub follow_up_multiples: Vec<f64>,
    /// Absolute administrative follow-up horizons (fig1).
    pub follow_up_times: Vec<f64>,
    /// Means of the exponential dropout law (fig1; `0` means no dropout).
    pub censoring_means: Vec<f64>,
    /// Number of equal-mass strata for the stratified adjustment.
    pub strata: usize,
}

impl Scenario {
    pub fn default_for(exhibit: Exhibit) -> Scenario {
        let (n_obs, n_sim, seed) = match exhibit {
            Exhibit::Table1a => (500, 1000, 11),
            Exhibit::Table1b => (500, 1000, 12),
            Exhibit::Fig1 => (1_000_000, 1, 13),
            Exhibit::Fig2L => (1_000_000, 1, 14),
            Exhibit::Fig2R => (1_000_000, 1, 15),
            Exhibit::Fig3 => (1_000_000, 1, 16),
            Exhibit::Fig5 => (100_000, 1, 17),
            Exhibit::FigA1 => (100_000, 1, 18),
            Exhibit::FigA2 => (100_000, 1, 19),
            Exhibit::FigA3 => (100_000, 1, 20),
            Exhibit::SuppTable => (1_000_000, 1, 21),
            Exhibit::CaseMixture => (0, 0, 22),
        };
        let fig1 = exhibit == Exhibit::Fig1;
        Scenario {
            name: exhibit.tag().to_owned(),
            exhibit,
            n_obs,
            n_sim,
            seed,
            follow_up_multiples: if fig1 { vec![3.0, 5.0, 8.0, 0.0] } else { vec![] },
            follow_up_times: if fig1 { vec![1.0, 2.0, 3.0, 4.0, 6.0] } else { vec![] },
            censoring_means: if fig1 { vec![0.0, 50.0, 100.0, 200.0] } else { vec![] },
            strata: 20,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.exhibit != Exhibit::CaseMixture && (self.n_obs < 10 || self.n_sim == 0) {
            return bad(format!("n_obs must be at least 10 and n_sim at least 1 (got {} and {})", self.n_obs, self.n_sim));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("invalid scenario name {:?}", self.name));
        }
        if self.follow_up_multiples.iter().chain(&self.follow_up_times).chain(&self.censoring_means).any(|x| !(*x >= 0.0 && x.is_finite())) {
            return bad("follow-up and censoring settings must be finite and non-negative".into());
        }
        if self.strata == 0 {
            return bad("strata must be positive".into());
        }
        Ok(())
    }
}

/// Keys accepted in a scenario TOML file. Everything except `scenario` is
/// optional and falls back to the registered default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: String,
    pub name: Option<String>,
    pub n_obs: Option<usize>,
    pub n_sim: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub follow_up_multiples: Option<Vec<f64>>,
    pub follow_up_times: Option<Vec<f64>>,
    pub censoring_means: Option<Vec<f64>>,
    pub strata: Option<usize>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> CliResult<ScenarioFile> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&self, mut s: Scenario) -> Scenario {
        if let Some(v) = &self.name {
            s.name = v.clone();
        }
        if let Some(v) = self.n_obs {
            s.n_obs = v;
        }
        if let Some(v) = self.n_sim {
            s.n_sim = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = &self.follow_up_multiples {
            s.follow_up_multiples = v.clone();
        }
        if let Some(v) = &self.follow_up_times {
            s.follow_up_times = v.clone();
        }
        if let Some(v) = &self.censoring_means {
            s.censoring_means = v.clone();
        }
        if let Some(v) = self.strata {
            s.strata = v;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for e in Exhibit::ALL {
            assert_eq!(e.tag().parse::<Exhibit>().unwrap(), e);
            assert!(Scenario::default_for(e).validate().is_ok());
        }
        assert!("fig4".parse::<Exhibit>().is_err());
    }

    #[test]
    fn file_overrides() {
        let f: ScenarioFile = toml::from_str("scenario = \"fig1\"\nn_obs = 1000\ncensoring_means = [10.0]\n").unwrap();
        let s = f.apply(Scenario::default_for(Exhibit::Fig1));
        assert_eq!(s.n_obs, 1000);
        assert_eq!(s.censoring_means, vec![10.0]);
        assert_eq!(s.seed, 13);
        assert!(toml::from_str::<ScenarioFile>("scenario = \"fig1\"\nbogus = 1\n").is_err());
    }
}
