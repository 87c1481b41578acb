//! Closed forms of the nested special cases.

use super::mixture::{alternating_beta_sum, resolve_alternating};
use super::{BeParams, GnbBeParams};
use crate::error::{domain, Result};
use crate::specfun::{log_binomial, log_gamma};

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return domain(format!("{name} must be finite and positive, got {v}"));
    }
    Ok(())
}

/// `ln Γ(v + x) - ln Γ(v)`, the log rising factorial.
fn log_rising(v: f64, x: u64) -> Result<f64> {
    Ok(log_gamma(v + x as f64)? - log_gamma(v)?)
}

/// Negative binomial / beta exponential:
/// `C(m+x-1, x) Σ_j C(x,j) (-1)^j B(b + (m+j)/c, a) / B(a,b)`.
pub fn nbbe_log_pmf(m: f64, a: f64, b: f64, c: f64, x: u64) -> Result<f64> {
    positive("m", m)?;
    let be = BeParams::new(a, b, c)?;
    let scale = log_binomial(m + x as f64 - 1.0, x)?;
    let outcome = alternating_beta_sum(&be, x, m, scale)?;
    let full = GnbBeParams::new(m, 1.0, a, b, c)?;
    Ok(resolve_alternating(outcome, scale, &full, x)?.log_prob)
}

/// Generalized Waring:
/// `Γ(a+b)Γ(m+b) a₍ₓ₎ m₍ₓ₎ / (Γ(b)Γ(m+a+b) (m+a+b)₍ₓ₎ x!)`.
pub fn gen_waring_log_pmf(m: f64, a: f64, b: f64, x: u64) -> Result<f64> {
    positive("m", m)?;
    positive("a", a)?;
    positive("b", b)?;
    Ok(
        log_gamma(a + b)? + log_gamma(m + b)? - log_gamma(b)? - log_gamma(m + a + b)?
            + log_rising(a, x)?
            + log_rising(m, x)?
            - log_rising(m + a + b, x)?
            - log_gamma(x as f64 + 1.0)?,
    )
}

/// Waring: `(k-m) Γ(m+x) Γ(k) / (Γ(m) Γ(k+x+1))`, requires `k > m > 0`.
pub fn waring_log_pmf(m: f64, k: f64, x: u64) -> Result<f64> {
    positive("m", m)?;
    if !(k.is_finite() && k > m) {
        return domain(format!("Waring law needs k > m, got k = {k}, m = {m}"));
    }
    Ok((k - m).ln() + log_rising(m, x)? + log_gamma(k)? - log_gamma(k + x as f64 + 1.0)?)
}

/// Yule: `b x! / (b+1)₍ₓ₊₁₎`.
pub fn yule_log_pmf(b: f64, x: u64) -> Result<f64> {
    positive("b", b)?;
    Ok(b.ln() + log_gamma(x as f64 + 1.0)? - log_rising(b + 1.0, x + 1)?)
}

/// Binomial / beta exponential, supported on `0..=m`:
/// `C(m, x) Σ_j C(x,j) (-1)^j B(b + (j+m-x)/c, a) / B(a,b)`.
pub fn binbe_log_pmf(m: u64, a: f64, b: f64, c: f64, x: u64) -> Result<f64> {
    if m == 0 {
        return domain("binomial size m must be positive");
    }
    let be = BeParams::new(a, b, c)?;
    if x > m {
        return Ok(f64::NEG_INFINITY);
    }
    let scale = log_binomial(m as f64, x)?;
    let outcome = alternating_beta_sum(&be, x, (m - x) as f64, scale)?;
    let full = GnbBeParams::new(m as f64, 0.0, a, b, c)?;
    Ok(resolve_alternating(outcome, scale, &full, x)?.log_prob)
}
