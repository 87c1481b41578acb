//! Special-function kernel: log-gamma, log-beta, real-argument log-binomial
//! coefficients and a signed log-sum-exp for alternating series.
//!
//! `log_gamma` uses the Stirling series for `z >= 10` and shifts smaller
//! arguments upward with the recurrence `Γ(z + 1) = z Γ(z)`. Eight correction
//! terms keep the truncation error below 1e-17 at the switch point, so the
//! result is limited by double rounding only.

use std::cmp::Ordering;

use crate::error::{domain, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const STIRLING_MIN: f64 = 10.0;

/// `B_{2k} / (2k (2k - 1))` for k = 1..=8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `ln Γ(z) - [(z - ½) ln z - z + ½ ln 2π]` for `z >= 10`.
fn stirling_correction(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for &coeff in STIRLING_COEFFS.iter().rev() {
        series = series * inv2 + coeff;
    }
    series * inv
}

fn stirling(z: f64) -> f64 {
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + stirling_correction(z)
}

/// Natural log of the gamma function for finite `z > 0`.
pub fn log_gamma(z: f64) -> Result<f64> {
    if !(z.is_finite() && z > 0.0) {
        return domain(format!("log_gamma requires a finite positive argument, got {z}"));
    }
    if z >= STIRLING_MIN {
        return Ok(stirling(z));
    }
    let mut shifted = z;
    let mut product = 1.0;
    while shifted < STIRLING_MIN {
        product *= shifted;
        shifted += 1.0;
    }
    Ok(stirling(shifted) - product.ln())
}

/// `ln(1 - e^{-u})` for `u > 0`, accurate at both ends.
pub fn log1mexp(u: f64) -> f64 {
    if u > std::f64::consts::LN_2 {
        (-(-u).exp()).ln_1p()
    } else {
        (-(-u).exp_m1()).ln()
    }
}

/// `ln Γ(s + r) - ln Γ(s)` for `s > 0`, `s + r > 0`.
///
/// For large arguments the difference is formed from the Stirling series
/// directly, so it keeps full relative accuracy even when both log-gammas are
/// huge.
pub fn log_gamma_ratio(s: f64, r: f64) -> Result<f64> {
    if !(s.is_finite() && r.is_finite() && s > 0.0 && s + r > 0.0) {
        return domain(format!("log_gamma_ratio({s}, {r}) needs s > 0 and s + r > 0"));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    if s >= STIRLING_MIN && s + r >= STIRLING_MIN {
        let t = s + r;
        return Ok((s - 0.5) * (r / s).ln_1p() + r * (t.ln() - 1.0) + stirling_correction(t) - stirling_correction(s));
    }
    Ok(log_gamma(s + r)? - log_gamma(s)?)
}

/// `ln B(r, s) = ln Γ(r) + ln Γ(s) - ln Γ(r + s)`, arranged so that large
/// arguments do not cancel.
pub fn log_beta(r: f64, s: f64) -> Result<f64> {
    if !(r > 0.0 && s > 0.0 && r.is_finite() && s.is_finite()) {
        return domain(format!("log_beta requires finite positive arguments, got ({r}, {s})"));
    }
    let (p, q) = if r <= s { (r, s) } else { (s, r) };
    if p >= STIRLING_MIN {
        let sum = p + q;
        let corr = stirling_correction(p) + stirling_correction(q) - stirling_correction(sum);
        return Ok(HALF_LN_2PI - 0.5 * q.ln() + (p - 0.5) * (p / sum).ln() + q * (-p / sum).ln_1p() + corr);
    }
    if q >= STIRLING_MIN {
        return Ok(log_gamma(p)? - log_gamma_ratio(q, p)?);
    }
    Ok(log_gamma(p)? + log_gamma(q)? - log_gamma(p + q)?)
}

/// `ln C(n, x)` for real `n`, i.e. `ln Γ(n+1) - ln Γ(x+1) - ln Γ(n-x+1)`.
pub fn log_binomial(n: f64, x: u64) -> Result<f64> {
    let xf = x as f64;
    if !(n.is_finite() && n + 1.0 > 0.0 && n - xf + 1.0 > 0.0) {
        return domain(format!("log_binomial({n}, {x}) has a nonpositive gamma argument"));
    }
    if x == 0 {
        return Ok(0.0);
    }
    let rest = n - xf;
    if rest < xf {
        return Ok(log_gamma_ratio(xf + 1.0, rest)? - log_gamma(rest + 1.0)?);
    }
    Ok(log_gamma_ratio(rest + 1.0, xf)? - log_gamma(xf + 1.0)?)
}

/// Sign of a [`SignedLogValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

/// A real number stored as a sign and the log of its magnitude.
///
/// Zero is represented by `Sign::Zero`; its `log_mag` is ignored and kept at
/// negative infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    pub sign: Sign,
    pub log_mag: f64,
}

impl SignedLogValue {
    pub const ZERO: SignedLogValue = SignedLogValue {
        sign: Sign::Zero,
        log_mag: f64::NEG_INFINITY,
    };

    pub fn new(sign: Sign, log_mag: f64) -> Self {
        if sign == Sign::Zero || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { sign, log_mag }
        }
    }

    pub fn positive(log_mag: f64) -> Self {
        Self::new(Sign::Positive, log_mag)
    }

    pub fn negative(log_mag: f64) -> Self {
        Self::new(Sign::Negative, log_mag)
    }

    pub fn from_f64(value: f64) -> Self {
        match value.partial_cmp(&0.0) {
            Some(Ordering::Greater) => Self::positive(value.ln()),
            Some(Ordering::Less) => Self::negative((-value).ln()),
            _ => Self::ZERO,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            Sign::Zero => 0.0,
            s => s.as_f64() * self.log_mag.exp(),
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == Sign::Zero
    }

    /// Product of two signed values.
    pub fn mul(self, other: Self) -> Self {
        let sign = match (self.sign, other.sign) {
            (Sign::Zero, _) | (_, Sign::Zero) => return Self::ZERO,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        };
        Self::new(sign, self.log_mag + other.log_mag)
    }

    pub fn neg(self) -> Self {
        Self::new(self.sign.flip(), self.log_mag)
    }
}

/// Knuth's error-free addition: returns `(s, e)` with `s + e == a + b` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    err: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let (s, e) = two_sum(self.sum, v);
        self.sum = s;
        self.err += e;
    }

    fn value(self) -> f64 {
        self.sum + self.err
    }
}

/// Sums a sequence of signed log-space values.
///
/// Returns the sum together with the cancellation ratio
/// `Σ|terms| / |result|`, which is 1 for same-signed input and grows as the
/// positive and negative parts cancel. A zero result reports infinity.
pub fn signed_log_sum<I>(terms: I) -> (SignedLogValue, f64)
where
    I: IntoIterator<Item = SignedLogValue>,
{
    let terms: Vec<SignedLogValue> = terms.into_iter().filter(|t| !t.is_zero()).collect();
    let Some(max_log) = terms.iter().map(|t| t.log_mag).max_by(|a, b| a.total_cmp(b)) else {
        return (SignedLogValue::ZERO, f64::INFINITY);
    };
    if max_log == f64::INFINITY {
        let pos = terms
            .iter()
            .any(|t| t.log_mag == f64::INFINITY && t.sign == Sign::Positive);
        let neg = terms
            .iter()
            .any(|t| t.log_mag == f64::INFINITY && t.sign == Sign::Negative);
        return match (pos, neg) {
            (true, false) => (SignedLogValue::positive(f64::INFINITY), 1.0),
            (false, true) => (SignedLogValue::negative(f64::INFINITY), 1.0),
            _ => (SignedLogValue::new(Sign::Positive, f64::NAN), f64::NAN),
        };
    }

    let mut pos = Compensated::default();
    let mut neg = Compensated::default();
    for t in &terms {
        let scaled = (t.log_mag - max_log).exp();
        match t.sign {
            Sign::Positive => pos.add(scaled),
            Sign::Negative => neg.add(scaled),
            Sign::Zero => {}
        }
    }

    let (head, tail) = two_sum(pos.sum, -neg.sum);
    let diff = head + (tail + (pos.err - neg.err));
    let total = pos.value() + neg.value();
    if diff == 0.0 {
        return (SignedLogValue::ZERO, f64::INFINITY);
    }
    let sign = if diff > 0.0 { Sign::Positive } else { Sign::Negative };
    let result = SignedLogValue::new(sign, diff.abs().ln() + max_log);
    (result, total / diff.abs())
}
