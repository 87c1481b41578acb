use super::BeParams;
use crate::error::{domain, Result};
use crate::specfun::{log1mexp, log_beta};

/// Log-density of the beta exponential law at `lam > 0`.
pub fn be_log_pdf(p: &BeParams, lam: f64) -> Result<f64> {
    if !(lam > 0.0) {
        return domain(format!("beta exponential density needs lam > 0, got {lam}"));
    }
    let mut v = p.c.ln() - log_beta(p.a, p.b)? - p.b * p.c * lam;
    if p.a != 1.0 {
        v += (p.a - 1.0) * log1mexp(p.c * lam);
    }
    Ok(v)
}

/// Log of the moment generating function `B(b - t/c, a) / B(a, b)`, defined for `t < bc`.
pub fn be_log_mgf(p: &BeParams, t: f64) -> Result<f64> {
    let shifted = p.b - t / p.c;
    if !(shifted > 0.0) {
        return domain(format!(
            "beta exponential mgf diverges for t = {t} >= bc = {}",
            p.b * p.c
        ));
    }
    Ok(log_beta(shifted, p.a)? - log_beta(p.a, p.b)?)
}
