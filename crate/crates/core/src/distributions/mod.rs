//! The GNB-BE family, its mixing law and its nested special cases.

mod beta_exponential;
mod gnb;
mod mixture;
mod moments;
mod submodels;

pub use beta_exponential::{be_log_mgf, be_log_pdf};
pub use gnb::gnb_log_pmf;
pub(crate) use gnb::{gnb_log_kernel, gnb_log_prefix};
pub use mixture::{
    gnbbe_log_pmf, gnbbe_log_pmf_many, gnbbe_pmf_oracle, total_mass, MassReport, PmfEval, CANCELLATION_LIMIT,
    DEFAULT_TAIL_TOL, DEFAULT_X_CAP,
};
pub use moments::{factorial_moment, index_of_dispersion, mean, moment_variance, paper_variance};
pub use submodels::{binbe_log_pmf, gen_waring_log_pmf, nbbe_log_pmf, waring_log_pmf, yule_log_pmf};

use crate::error::{domain, Result};

fn check_beta(m: f64, beta: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return domain(format!("m must be finite and positive, got {m}"));
    }
    if beta == 0.0 {
        if m.fract() != 0.0 {
            return domain(format!("beta = 0 (binomial case) needs an integer m, got {m}"));
        }
    } else if !(beta.is_finite() && beta >= 1.0) {
        return domain(format!("beta must be 0 or at least 1, got {beta}"));
    }
    Ok(())
}

/// Parameters of the generalized negative binomial law
/// `p(x) = m/(m+βx) C(m+βx, x) (1-θ)^x θ^{m+βx-x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnbParams {
    m: f64,
    beta: f64,
    theta: f64,
}

impl GnbParams {
    pub fn new(m: f64, beta: f64, theta: f64) -> Result<Self> {
        check_beta(m, beta)?;
        if !(theta > 0.0 && theta < 1.0) {
            return domain(format!("theta must lie in (0, 1), got {theta}"));
        }
        Ok(Self { m, beta, theta })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Beta exponential law with density `c/B(a,b) e^{-bcλ} (1-e^{-cλ})^{a-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeParams {
    a: f64,
    b: f64,
    c: f64,
}

impl BeParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("{name} must be finite and positive, got {v}"));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// The five-parameter GNB-BE family `(m, β, a, b, c)`.
///
/// `β` is either 0 (with integer `m`) or at least 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnbBeParams {
    m: f64,
    beta: f64,
    be: BeParams,
}

impl GnbBeParams {
    pub fn new(m: f64, beta: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        check_beta(m, beta)?;
        Ok(Self {
            m,
            beta,
            be: BeParams::new(a, b, c)?,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a(&self) -> f64 {
        self.be.a
    }

    pub fn b(&self) -> f64 {
        self.be.b
    }

    pub fn c(&self) -> f64 {
        self.be.c
    }

    pub fn be(&self) -> BeParams {
        self.be
    }

    /// The conditional GNB law at mixing value `θ`.
    pub fn gnb(&self, theta: f64) -> Result<GnbParams> {
        GnbParams::new(self.m, self.beta, theta)
    }

    /// Largest support point when `β = 0`, otherwise `None`.
    pub fn support_max(&self) -> Option<u64> {
        (self.beta == 0.0).then_some(self.m as u64)
    }
}

/// Settings for the quadrature route of the GNB-BE pmf.
///
/// The integral is taken over `s = ln λ` on the range where the integrand is
/// within `e^{-46}` of its maximum; `upper_cut` optionally caps `λ` further.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub panel_count: usize,
    pub upper_cut: Option<f64>,
}

impl QuadratureConfig {
    pub const MIN_PANELS: usize = 16;

    pub fn new(panel_count: usize, upper_cut: Option<f64>) -> Result<Self> {
        if panel_count < Self::MIN_PANELS {
            return domain(format!(
                "panel_count must be at least {}, got {panel_count}",
                Self::MIN_PANELS
            ));
        }
        if let Some(cut) = upper_cut {
            if !(cut > 0.0) {
                return domain(format!("upper_cut must be positive, got {cut}"));
            }
        }
        Ok(Self { panel_count, upper_cut })
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panel_count: 2000,
            upper_cut: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_validation() {
        assert!(GnbBeParams::new(2.0, 1.5, 1.0, 1.0, 1.0).is_ok());
        assert!(GnbBeParams::new(2.0, 0.0, 1.0, 1.0, 1.0).is_ok());
        assert!(GnbBeParams::new(2.5, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(GnbBeParams::new(2.0, 0.5, 1.0, 1.0, 1.0).is_err());
        assert!(GnbBeParams::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(GnbBeParams::new(1.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(GnbBeParams::new(1.0, 1.0, 1.0, f64::INFINITY, 1.0).is_err());
        assert!(GnbParams::new(1.0, 1.0, 1.0).is_err());
        assert!(GnbParams::new(1.0, 1.0, 0.0).is_err());
        assert!(QuadratureConfig::new(8, None).is_err());
        assert!(QuadratureConfig::new(16, Some(-1.0)).is_err());
    }
}
