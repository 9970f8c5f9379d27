use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("cannot parse model spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },

    #[error("integral diverges (partial value {partial:e} after extending to z = {reached:e})")]
    Divergent { partial: f64, reached: f64 },

    #[error("quadrature did not converge: error estimate {error:e} for value {value:e}")]
    NonConvergence { value: f64, error: f64 },

    #[error("integrand returned a non-finite value at z = {0:e}")]
    NonFinite(f64),

    #[error("insufficient data: {found} exceedances, at least {required} required")]
    InsufficientData { found: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
