use thiserror::Error;

/// Errors raised by model construction, numerics and the verdict engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row {row}: negative count {count}")]
    NegativeCount { row: usize, count: String },

    #[error("table has zero total mass")]
    ZeroTotal,

    #[error("{axis} needs at least {needed} levels, found {found}")]
    TooFewLevels {
        axis: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("unknown {axis} level {level:?}")]
    UnknownLevel { axis: &'static str, level: String },

    #[error("zero-mass conditioning event: {cell}")]
    ZeroMass { cell: String },

    #[error("conditioning on null event: {what}")]
    NullConditioning { what: String },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error bound {error_bound:e})"
    )]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("non-finite function value at {at}")]
    NonFinite { at: f64 },

    #[error("bracket [{lo}, {hi}] does not contain target {target} (F(lo)={f_lo}, F(hi)={f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },

    #[error("not a CDF: non-monotone values near {at}")]
    NotACdf { at: f64 },

    #[error("probability level {0} outside (0, 1)")]
    InvalidProbability(f64),

    #[error("quantile coefficient undefined (null density {density:e} at {at})")]
    UndefinedQuantileCoefficient { density: f64, at: String },

    #[error("non-differentiable point: density jumps near {at}")]
    NonDifferentiable { at: String },

    #[error("homogeneity undefined: fewer than two W points")]
    HomogeneityUndefined,

    #[error("collinear regressors")]
    Collinear,

    #[error("invalid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("unknown model family {0:?}")]
    UnknownFamily(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid numeric setting: {0}")]
    InvalidSetting(String),
}

impl Error {
    /// True for failures of the numerical kernel (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::NonFinite { .. }
                | Error::Bracket { .. }
                | Error::NotACdf { .. }
                | Error::NonDifferentiable { .. }
                | Error::UndefinedQuantileCoefficient { .. }
                | Error::NullConditioning { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
