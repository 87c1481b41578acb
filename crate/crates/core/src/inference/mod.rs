//! Maximum-likelihood fitting of count models to grouped frequency data.

mod data;
mod fit;
mod models;
mod optimize;

pub use data::FrequencyTable;
pub use fit::{
    chi_square_gof, chi_square_pooled, compare_models, fit, Comparison, FitOptions, FitResult, GofResult, ModelOutcome,
};
pub use models::{
    expected_frequencies, from_unconstrained, log_likelihood, model_log_pmf, model_total_mass, nb_log_pmf,
    poisson_log_pmf, to_unconstrained, ModelKind,
};
