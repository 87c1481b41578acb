//! Seedable random-variate generation for the GNB-BE family via its
//! mixture representation.

mod philox;
mod variates;

pub use philox::RandomSource;

pub use variates::{sample_be, sample_beta, sample_gamma, sample_gnbbe, sample_standard_normal, MAX_REJECTIONS};
