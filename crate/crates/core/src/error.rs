use thiserror::Error;

/// Errors raised by the numerical kernels, the fitting code and the CLI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("factorial moment of order {order} does not exist (needs b > order/c, got b = {b}, c = {c})")]
    MomentExistence { order: u32, b: f64, c: f64 },

    #[error("quadrature did not converge: panel doubling changed the result by {relative_change:e} (relative)")]
    Quadrature { value: f64, relative_change: f64 },

    #[error("sampler exhausted after {attempts} rejected draws (parameters are severely mass-deficient)")]
    SamplerExhausted { attempts: u32 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
