//! Estimators computed from observed data `(L, A, T_obs, D)`.

pub mod adjust;
pub mod bootstrap;
pub mod cox;
pub mod km;
pub mod logt;
pub mod theta;

pub use adjust::{adjusted_survival, AdjustMethod, POSITIVITY_FLOOR};
pub use bootstrap::{bootstrap_band, MIN_REPLICATES};
pub use cox::{cox_fit, CoxFit};
pub use km::{kaplan_meier, weighted_kaplan_meier, StepSurvival};
pub use logt::{logt_regression, LogTFit};
pub use theta::{adjusted_theta, default_time_grid, observed_theta, quantile_ratio_summary, SUMMARY_LEVELS};
