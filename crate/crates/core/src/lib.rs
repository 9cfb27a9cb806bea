//! Simulation and estimation toolkit for structural causal accelerated failure
//! time (AFT) models.
//!
//! The crate is organised around four layers:
//!
//! * [`distributions`]: frailty, effect-heterogeneity and noise laws, Laplace
//!   transforms and a Gaussian copula for confounded draws.
//! * [`scm`]: cohort generation from a constant-rate structural causal AFT
//!   model, with independent censoring and an optional measured confounder.
//! * [`oracle`]: analytic / quadrature ground truth (marginal survival curves,
//!   causal acceleration factors θ(t), η(t), moment contrasts).
//! * [`estimators`]: Kaplan–Meier, observed and confounder-adjusted
//!   acceleration factors, Cox partial likelihood, log-time regression and a
//!   nonparametric bootstrap.
//!
//! Monte Carlo replications fan out through [`parallel`], which uses rayon when
//! the `parallel` feature is enabled (the default) and runs sequentially
//! otherwise. Every replication draws from its own [`rng::StreamSeed`]
//! substream, so results do not depend on the thread count.

pub mod curve;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod io;
pub mod oracle;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod scm;

pub use curve::{AccelCurve, AccelPoint, Axis, Grid, Provenance};
pub use distributions::{EffectLaw, FrailtyLaw, GaussianCopula};
pub use error::{Error, Result};
pub use rng::StreamSeed;
pub use scm::{
    Baseline, CensoringSpec, CohortRecord, Dataset, ScmConfig, TreatmentSpec,
};
