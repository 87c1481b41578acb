use super::RandomSource;
use crate::distributions::{gnb_log_kernel, gnb_log_prefix, BeParams, GnbBeParams, DEFAULT_X_CAP};
use crate::error::{domain, Error, Result};
use crate::specfun::log1mexp;

/// Maximum number of rejected conditional draws per GNB-BE variate.
pub const MAX_REJECTIONS: u32 = 1000;

/// Terms below this, once the conditional pmf is decreasing, are treated as
/// the end of the reachable mass.
const NEGLIGIBLE_TERM: f64 = 1e-20;

/// Standard normal variate by the Marsaglia polar method.
pub fn sample_standard_normal(rng: &mut RandomSource) -> f64 {
    loop {
        let u = 2.0 * rng.next_uniform() - 1.0;
        let v = 2.0 * rng.next_uniform() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Marsaglia–Tsang squeeze for shape >= 1.
fn gamma_at_least_one(shape: f64, rng: &mut RandomSource) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = sample_standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.next_open_uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Log of a unit-scale gamma variate. Shapes below one use
/// `G(α) = G(α + 1) U^{1/α}`, kept in log space so tiny shapes do not underflow.
fn log_gamma_variate(shape: f64, rng: &mut RandomSource) -> f64 {
    if shape >= 1.0 {
        gamma_at_least_one(shape, rng).ln()
    } else {
        let g = gamma_at_least_one(shape + 1.0, rng);
        g.ln() + rng.next_open_uniform().ln() / shape
    }
}

fn check_shape(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return domain(format!("{name} must be finite and positive, got {v}"));
    }
    Ok(())
}

/// Unit-scale gamma variate.
pub fn sample_gamma(shape: f64, rng: &mut RandomSource) -> Result<f64> {
    check_shape("shape", shape)?;
    Ok(log_gamma_variate(shape, rng).exp())
}

/// `(ln X, ln Y)` with `X ~ Gamma(a)`, `Y ~ Gamma(b)`.
fn log_gamma_pair(a: f64, b: f64, rng: &mut RandomSource) -> (f64, f64) {
    let lx = log_gamma_variate(a, rng);
    let ly = log_gamma_variate(b, rng);
    (lx, ly)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Beta(a, b) variate as `X / (X + Y)` from two gamma variates.
pub fn sample_beta(a: f64, b: f64, rng: &mut RandomSource) -> Result<f64> {
    check_shape("a", a)?;
    check_shape("b", b)?;
    let (lx, ly) = log_gamma_pair(a, b, rng);
    Ok((-softplus(ly - lx)).exp())
}

/// Beta exponential variate `λ = -ln(1 - V) / c` with `V ~ Beta(a, b)`.
///
/// `1 - V = Y/(X+Y)`, so `λ = ln(1 + X/Y) / c`, which avoids forming `1 - V`.
pub fn sample_be(p: &BeParams, rng: &mut RandomSource) -> f64 {
    let (lx, ly) = log_gamma_pair(p.a(), p.b(), rng);
    softplus(lx - ly) / p.c()
}

/// GNB-BE variate: `λ ~ BE(a, b, c)`, then `X ~ GNB(m, β, e^{-λ})` by
/// sequential inversion.
///
/// When the conditional GNB law is mass-deficient (`(1-θ)β > 1`) and the
/// uniform lies beyond its reachable mass, the draw is rejected and retried
/// with a fresh `λ`; the result is then distributed as the pmf divided by the
/// total mass. Inversion also stops at [`DEFAULT_X_CAP`], so draws follow
/// the pmf restricted to `x ≤ DEFAULT_X_CAP` and renormalised — the same
/// partial mass [`total_mass`](crate::distributions::total_mass) reports.
pub fn sample_gnbbe(p: &GnbBeParams, rng: &mut RandomSource) -> Result<u64> {
    for _ in 0..MAX_REJECTIONS {
        let lam = sample_be(&p.be(), rng);
        let u = rng.next_uniform();
        if let Some(x) = invert_gnb(p.m(), p.beta(), lam, u)? {
            return Ok(x);
        }
    }
    Err(Error::SamplerExhausted {
        attempts: MAX_REJECTIONS,
    })
}

fn invert_gnb(m: f64, beta: f64, lam: f64, u: f64) -> Result<Option<u64>> {
    let log_theta = -lam;
    let log_one_minus = log1mexp(lam);
    let last = if beta == 0.0 { m as u64 } else { DEFAULT_X_CAP };
    let mut acc = 0.0;
    let mut prev = 0.0;
    for x in 0..=last {
        let log_term = gnb_log_kernel(gnb_log_prefix(m, beta, x)?, m, beta, x, log_theta, log_one_minus);
        let term = log_term.exp();
        acc += term;
        if u < acc {
            return Ok(Some(x));
        }
        if term < NEGLIGIBLE_TERM && term < prev {
            break;
        }
        prev = term;
    }
    // β = 0 has finite support with unit mass; only rounding lands here.
    if beta == 0.0 {
        return Ok(Some(last));
    }
    Ok(None)
}
