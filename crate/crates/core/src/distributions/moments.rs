//! Factorial and crude moments of the GNB-BE law.
//!
//! `factorial_moment` evaluates `Γ(m+k)/Γ(m) Σ_j C(k,j) (-β)^j B(b-(k-j)/c, a)/B(a,b)`.
//! This expression mixes the conditional GNB factorial moment
//! `Γ(m+k)/Γ(m) ((1-θβ)/θ)^k`, which is exact only at `β = 1`; for other `β`
//! the values differ from the moments of the pmf and are returned as is.

use super::GnbBeParams;
use crate::error::{domain, Error, Result};
use crate::specfun::{log_beta, log_binomial, log_gamma, signed_log_sum, Sign, SignedLogValue};

fn check_order(p: &GnbBeParams, k: u32) -> Result<()> {
    if p.b() - k as f64 / p.c() <= 0.0 {
        return Err(Error::MomentExistence {
            order: k,
            b: p.b(),
            c: p.c(),
        });
    }
    Ok(())
}

/// `E[X(X-1)...(X-k+1)]` from the mixed conditional factorial moments; `k = 0` gives 1.
pub fn factorial_moment(p: &GnbBeParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    check_order(p, k)?;
    let log_norm = log_beta(p.a(), p.b())?;
    let log_beta_param = p.beta().ln();
    let mut terms = Vec::with_capacity(k as usize + 1);
    for j in 0..=k {
        if j > 0 && p.beta() == 0.0 {
            break;
        }
        let shifted = p.b() - (k - j) as f64 / p.c();
        let mut log_mag = log_binomial(k as f64, j as u64)? + log_beta(shifted, p.a())? - log_norm;
        if j > 0 {
            log_mag += j as f64 * log_beta_param;
        }
        let sign = if j % 2 == 0 { Sign::Positive } else { Sign::Negative };
        terms.push(SignedLogValue::new(sign, log_mag));
    }
    let (sum, _) = signed_log_sum(terms);
    let log_rising = log_gamma(p.m() + k as f64)? - log_gamma(p.m())?;
    Ok(sum.to_f64() * log_rising.exp())
}

fn beta_ratios(p: &GnbBeParams, order: u32) -> Result<(f64, f64)> {
    check_order(p, order)?;
    let log_norm = log_beta(p.a(), p.b())?;
    let r1 = (log_beta(p.b() - 1.0 / p.c(), p.a())? - log_norm).exp();
    let r2 = if order >= 2 {
        (log_beta(p.b() - 2.0 / p.c(), p.a())? - log_norm).exp()
    } else {
        f64::NAN
    };
    Ok((r1, r2))
}

/// `E[X] = m [B(b - 1/c, a) - β B(a, b)] / B(a, b)`.
pub fn mean(p: &GnbBeParams) -> Result<f64> {
    let (r1, _) = beta_ratios(p, 1)?;
    Ok(p.m() * (r1 - p.beta()))
}

/// The closed-form variance
/// `[m(m+1) B₂ B + m B₁ B - m² B₁² + 2βm B₁ B] / B²`
/// with `B = B(a,b)`, `B₁ = B(b-1/c, a)`, `B₂ = B(b-2/c, a)`.
///
/// This expression does not equal `E[X²] - E[X]²` (not even at `β = 1`,
/// where it exceeds [`moment_variance`] by `4m B₁/B`); use
/// [`moment_variance`] for the variance of the law.
pub fn paper_variance(p: &GnbBeParams) -> Result<f64> {
    let (r1, r2) = beta_ratios(p, 2)?;
    let m = p.m();
    Ok(m * (m + 1.0) * r2 + m * r1 - m * m * r1 * r1 + 2.0 * p.beta() * m * r1)
}

/// `μ₍₂₎ + μ₍₁₎ - μ₍₁₎²` from [`factorial_moment`].
pub fn moment_variance(p: &GnbBeParams) -> Result<f64> {
    let mu1 = factorial_moment(p, 1)?;
    let mu2 = factorial_moment(p, 2)?;
    Ok(mu2 + mu1 - mu1 * mu1)
}

/// Variance-to-mean ratio, `moment_variance / factorial_moment(1)`.
pub fn index_of_dispersion(p: &GnbBeParams) -> Result<f64> {
    let mu1 = factorial_moment(p, 1)?;
    if mu1 == 0.0 {
        return domain("index of dispersion undefined for zero mean");
    }
    Ok(moment_variance(p)? / mu1)
}
