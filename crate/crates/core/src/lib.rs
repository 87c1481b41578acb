//! The generalized negative binomial / beta exponential (GNB-BE) count
//! distribution: evaluation, sampling and maximum-likelihood fitting.
//!
//! `X | λ ~ GNB(m, β, θ = e^{-λ})` with `λ ~ BE(a, b, c)`. The family nests
//! the NB-BE (`β = 1`), generalized Waring (`β = 1, c = 1`), Waring and Yule
//! laws, and the binomial / beta exponential mixture (`β = 0`).

pub mod cli;
pub mod distributions;
pub mod error;
pub mod inference;
pub mod quadrature;
pub mod sampling;
pub mod specfun;

pub use error::{Error, Result};
