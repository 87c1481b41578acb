use super::GnbParams;
use crate::error::Result;
use crate::specfun::log_binomial;

/// `ln[m/(m+βx)] + ln C(m+βx, x)`, the θ-free part of the GNB pmf.
pub(crate) fn gnb_log_prefix(m: f64, beta: f64, x: u64) -> Result<f64> {
    let n = m + beta * x as f64;
    Ok((m / n).ln() + log_binomial(n, x)?)
}

/// GNB log-pmf given the prefix, `ln θ` and `ln(1-θ)`.
#[inline]
pub(crate) fn gnb_log_kernel(prefix: f64, m: f64, beta: f64, x: u64, log_theta: f64, log_one_minus_theta: f64) -> f64 {
    let xf = x as f64;
    let exponent = m + beta * xf - xf;
    let mut v = prefix;
    if x > 0 {
        v += xf * log_one_minus_theta;
    }
    if exponent != 0.0 {
        v += exponent * log_theta;
    }
    v
}

/// Log-pmf of the generalized negative binomial law
/// `m/(m+βx) C(m+βx, x) (1-θ)^x θ^{m+βx-x}`.
///
/// With `β = 0` the support is `0..=m` and larger `x` gives `-∞`.
pub fn gnb_log_pmf(p: &GnbParams, x: u64) -> Result<f64> {
    if p.beta == 0.0 && x as f64 > p.m {
        return Ok(f64::NEG_INFINITY);
    }
    let prefix = gnb_log_prefix(p.m, p.beta, x)?;
    Ok(gnb_log_kernel(prefix, p.m, p.beta, x, p.theta.ln(), (-p.theta).ln_1p()))
}
