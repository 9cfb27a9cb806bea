use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("implied copula correlation matrix is not positive semidefinite (1 - rho0^2 - rho1^2 = {0})")]
    NotPositiveDefinite(f64),

    #[error("Laplace transform is not available for {0}")]
    UnsupportedLaw(&'static str),

    #[error("quantile level {level} lies beyond the support of the survival curve (infimum {infimum})")]
    BeyondSupport { level: f64, infimum: f64 },

    #[error("quadrature did not converge at t = {t} (relative change {change:e})")]
    QuadratureNonConvergence { t: f64, change: f64 },

    #[error("grid is too coarse near zero: t = {0}")]
    GridTooCoarse(f64),

    #[error("arm {0} is empty")]
    EmptyArm(u8),

    #[error("no event observed in arm {0}")]
    NoEvents(u8),

    #[error("no overlap between the survival curves on the requested grid")]
    NoOverlap,

    #[error("censored records present ({0}); log-time regression needs complete data")]
    CensoredData(usize),

    #[error("positivity violated: propensity {propensity} below {floor}")]
    Positivity { propensity: f64, floor: f64 },

    #[error("stratum {0} has no records in the requested arm")]
    EmptyStratum(usize),

    #[error("dataset has no confounder column")]
    MissingConfounder,

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed data: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
