//! The GNB-BE pmf.
//!
//! The closed form is an alternating sum
//! `Σ_j C(x,j) (-1)^j B(b + (j+K)/c, a) / B(a,b)` with `K = m + βx - x`,
//! scaled by the GNB prefix `m/(m+βx) C(m+βx, x)`. Every term carries a
//! relative rounding error near 1e-14, so the result is only trusted while the
//! cancellation ratio stays at or below [`CANCELLATION_LIMIT`]. Past that the
//! pmf is recomputed from the mixture integral, whose integrand is
//! nonnegative.

use super::gnb::gnb_log_prefix;
use super::{BeParams, GnbBeParams, QuadratureConfig};
use crate::error::{domain, Error, Result};
use crate::quadrature::GaussLegendre;
use crate::specfun::{log1mexp, log_beta, log_binomial, signed_log_sum, Sign, SignedLogValue};

/// Largest cancellation ratio for which the alternating sum is used as is.
pub const CANCELLATION_LIMIT: f64 = 1e4;
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
pub const DEFAULT_X_CAP: u64 = 10_000;

/// Relative change between `n` and `2n` panels above which the quadrature
/// reports non-convergence.
const QUADRATURE_RTOL: f64 = 1e-8;
const FALLBACK_QUADRATURE: QuadratureConfig = QuadratureConfig {
    panel_count: 48,
    upper_cut: None,
};
const POSITIVE_SLACK: f64 = 1e-9;

/// Result of a GNB-BE pmf evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmfEval {
    pub log_prob: f64,
    /// `Σ|terms| / |sum|` of the alternating sum. When the sum was abandoned
    /// early this is the lower bound that triggered the switch.
    pub cancellation: f64,
    pub used_quadrature: bool,
}

impl PmfEval {
    pub fn prob(&self) -> f64 {
        self.log_prob.exp()
    }
}

pub(crate) enum AlternatingSum {
    Done {
        sum: SignedLogValue,
        cancellation: f64,
    },
    /// The partial sum of |terms| alone already implies a cancellation ratio
    /// above the limit.
    Abandoned {
        cancellation_bound: f64,
    },
}

/// `Σ_{j=0}^{x} C(x,j) (-1)^j B(b + (j + shift)/c, a) / B(a, b)` in signed
/// log space.
///
/// `log_scale` is the log of the factor multiplying the sum in the final
/// probability. Since a probability never exceeds one, `e^{log_scale} Σ|t_j|`
/// is a lower bound on the cancellation ratio, which lets hopeless sums stop
/// early.
pub(crate) fn alternating_beta_sum(be: &BeParams, x: u64, shift: f64, log_scale: f64) -> Result<AlternatingSum> {
    let log_norm = log_beta(be.a, be.b)?;
    let log_limit = CANCELLATION_LIMIT.ln();
    let mut terms = Vec::with_capacity(x as usize + 1);
    let mut log_abs_total = f64::NEG_INFINITY;
    for j in 0..=x {
        let arg = be.b + (j as f64 + shift) / be.c;
        let log_mag = log_binomial(x as f64, j)? + log_beta(arg, be.a)? - log_norm;
        log_abs_total = log_add_exp(log_abs_total, log_mag);
        if log_scale + log_abs_total > log_limit {
            return Ok(AlternatingSum::Abandoned {
                cancellation_bound: (log_scale + log_abs_total).exp(),
            });
        }
        let sign = if j % 2 == 0 { Sign::Positive } else { Sign::Negative };
        terms.push(SignedLogValue::new(sign, log_mag));
    }
    let (sum, cancellation) = signed_log_sum(terms);
    Ok(AlternatingSum::Done { sum, cancellation })
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Applies the trust policy to an alternating sum: keeps it when the
/// cancellation ratio is within the limit, otherwise evaluates the mixture
/// integral for `quad_params`.
pub(crate) fn resolve_alternating(
    outcome: AlternatingSum,
    log_scale: f64,
    quad_params: &GnbBeParams,
    x: u64,
) -> Result<PmfEval> {
    match trusted(outcome, log_scale)? {
        Ok(eval) => Ok(eval),
        Err(cancellation) => finish(quadrature_log_pmf(quad_params, x)?, cancellation, true),
    }
}

/// The closed-form value when it is trusted, else the cancellation ratio (or
/// its lower bound) that rejected it.
fn trusted(outcome: AlternatingSum, log_scale: f64) -> Result<std::result::Result<PmfEval, f64>> {
    match outcome {
        AlternatingSum::Done { sum, cancellation } => {
            if sum.sign == Sign::Positive && cancellation <= CANCELLATION_LIMIT {
                return finish(log_scale + sum.log_mag, cancellation, false).map(Ok);
            }
            Ok(Err(cancellation))
        }
        AlternatingSum::Abandoned { cancellation_bound } => Ok(Err(cancellation_bound)),
    }
}

/// Mixture integral: the concave trapezoid route when it applies, then
/// Gauss–Legendre with 48 panels, then the default configuration.
fn quadrature_log_pmf(p: &GnbBeParams, x: u64) -> Result<f64> {
    if let Some(v) = fast_log_pmf(p, x)? {
        return Ok(v);
    }
    match oracle_log_pmf(p, x, &FALLBACK_QUADRATURE) {
        Err(Error::Quadrature { .. }) => oracle_log_pmf(p, x, &QuadratureConfig::default()),
        other => other,
    }
}

/// Mixture integral by the concave trapezoid route, when it applies.
fn fast_log_pmf(p: &GnbBeParams, x: u64) -> Result<Option<f64>> {
    Ok(LogIntegrand::new(p, x)?.concave_log_integral())
}

fn finish(log_prob: f64, cancellation: f64, used_quadrature: bool) -> Result<PmfEval> {
    if log_prob > POSITIVE_SLACK {
        return domain(format!("pmf evaluated to exp({log_prob}) > 1"));
    }
    Ok(PmfEval {
        log_prob: log_prob.min(0.0),
        cancellation,
        used_quadrature,
    })
}

/// Log-pmf of GNB-BE(m, β, a, b, c) at `x`.
///
/// Uses the alternating closed form when its cancellation ratio is at most
/// [`CANCELLATION_LIMIT`] and the mixture integral otherwise. With `β = 0`,
/// points beyond `m` have probability zero.
pub fn gnbbe_log_pmf(p: &GnbBeParams, x: u64) -> Result<PmfEval> {
    if let Some(n) = p.support_max() {
        if x > n {
            return Ok(PmfEval {
                log_prob: f64::NEG_INFINITY,
                cancellation: 1.0,
                used_quadrature: false,
            });
        }
    }
    let prefix = gnb_log_prefix(p.m, p.beta, x)?;
    let shift = p.m + p.beta * x as f64 - x as f64;
    let outcome = alternating_beta_sum(&p.be, x, shift, prefix)?;
    resolve_alternating(outcome, prefix, p, x)
}

/// [`gnbbe_log_pmf`] at several points at once.
///
/// Points needing the mixture integral share one set of quadrature nodes,
/// which is much cheaper than integrating each separately.
pub fn gnbbe_log_pmf_many(p: &GnbBeParams, xs: &[u64]) -> Result<Vec<PmfEval>> {
    let mut out = Vec::with_capacity(xs.len());
    let mut pending = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        if p.support_max().is_some_and(|n| x > n) {
            out.push(PmfEval {
                log_prob: f64::NEG_INFINITY,
                cancellation: 1.0,
                used_quadrature: false,
            });
            continue;
        }
        let prefix = gnb_log_prefix(p.m, p.beta, x)?;
        let shift = p.m + p.beta * x as f64 - x as f64;
        let outcome = alternating_beta_sum(&p.be, x, shift, prefix)?;
        match trusted(outcome, prefix)? {
            Ok(eval) => out.push(eval),
            Err(cancellation) => {
                pending.push((i, cancellation));
                out.push(PmfEval {
                    log_prob: f64::NAN,
                    cancellation,
                    used_quadrature: true,
                });
            }
        }
    }
    if pending.is_empty() {
        return Ok(out);
    }
    let integrands = pending
        .iter()
        .map(|&(i, _)| LogIntegrand::new(p, xs[i]))
        .collect::<Result<Vec<_>>>()?;
    let values = match shared_concave_log_integrals(&integrands) {
        Some(v) => v,
        None => pending
            .iter()
            .map(|&(i, _)| quadrature_log_pmf(p, xs[i]))
            .collect::<Result<Vec<_>>>()?,
    };
    for (&(i, cancellation), v) in pending.iter().zip(values) {
        out[i] = finish(v, cancellation, true)?;
    }
    Ok(out)
}

/// Probability `P(X = x)` from the mixture integral
/// `∫ GNB(x | θ = e^{-λ}) g(λ; a, b, c) dλ`.
///
/// Integrates over `s = ln λ` with a composite 8-point Gauss–Legendre rule
/// and compares `panel_count` against `2 * panel_count` panels; a relative
/// change above 1e-8 is reported as [`Error::Quadrature`].
pub fn gnbbe_pmf_oracle(p: &GnbBeParams, x: u64, q: &QuadratureConfig) -> Result<f64> {
    Ok(oracle_log_pmf(p, x, q)?.exp())
}

pub(crate) fn oracle_log_pmf(p: &GnbBeParams, x: u64, q: &QuadratureConfig) -> Result<f64> {
    if q.panel_count < QuadratureConfig::MIN_PANELS {
        return domain(format!("panel_count must be at least {}", QuadratureConfig::MIN_PANELS));
    }
    if let Some(n) = p.support_max() {
        if x > n {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let integrand = LogIntegrand::new(p, x)?;
    let Some((lo, hi, peak)) = integrand.support(q.upper_cut) else {
        return Ok(f64::NEG_INFINITY);
    };
    let rule = GaussLegendre::order8();
    let f = |s: f64| (integrand.eval(s) - peak).exp();
    let coarse = rule.integrate(f, lo, hi, q.panel_count);
    let fine = rule.integrate(f, lo, hi, 2 * q.panel_count);
    let log_value = integrand.constant + peak + fine.ln();
    let relative_change = ((fine - coarse) / fine).abs();
    if !(relative_change <= QUADRATURE_RTOL) {
        return Err(Error::Quadrature {
            value: log_value.exp(),
            relative_change,
        });
    }
    Ok(log_value)
}

/// `ln[GNB(x | e^{-λ}) g(λ) λ]` at `λ = e^s`, split into a constant and an
/// `s`-dependent part.
struct LogIntegrand {
    constant: f64,
    x: f64,
    /// exponent of θ in the GNB kernel plus `bc`
    decay: f64,
    a_minus_one: f64,
    c: f64,
    bc: f64,
}

const SCAN_LO: f64 = -40.0;
const SCAN_HI: f64 = 8.0;
const SCAN_STEP: f64 = 0.25;
const S_FLOOR: f64 = -700.0;
const S_CEIL: f64 = 40.0;
/// Integrand values below `e^{-46}` of the peak are dropped.
const LOG_DROP: f64 = 46.0;
const MAX_TRAPEZOID_NODES: usize = 4000;
/// Relative change between steps `h` and `h/2`; the halved rule is far more
/// accurate than this difference for analytic integrands.
const TRAPEZOID_RTOL: f64 = 1e-11;

/// `u / (e^u - 1)`, decreasing from 1.
fn phi(u: f64) -> f64 {
    if u < 1e-10 {
        1.0 - 0.5 * u
    } else {
        u / u.exp_m1()
    }
}

/// `u φ'(u) = φ(u) (1 - u / (1 - e^{-u}))`, always negative.
fn psi(u: f64) -> f64 {
    if u < 1e-3 {
        -0.5 * u + u * u / 6.0
    } else {
        phi(u) * (1.0 - u / -(-u).exp_m1())
    }
}

impl LogIntegrand {
    fn new(p: &GnbBeParams, x: u64) -> Result<Self> {
        let prefix = gnb_log_prefix(p.m, p.beta, x)?;
        let constant = prefix + p.c().ln() - log_beta(p.a(), p.b())?;
        let xf = x as f64;
        Ok(Self {
            constant,
            x: xf,
            decay: p.m + p.beta * xf - xf + p.b() * p.c(),
            a_minus_one: p.a() - 1.0,
            c: p.c(),
            bc: p.b() * p.c(),
        })
    }

    #[inline]
    fn eval(&self, s: f64) -> f64 {
        let lam = s.exp();
        let mut v = s - self.decay * lam;
        if self.x > 0.0 {
            v += self.x * log1mexp(lam);
        }
        if self.a_minus_one != 0.0 {
            v += self.a_minus_one * log1mexp(self.c * lam);
        }
        v
    }

    /// Integration range `[lo, hi]` in `s` outside of which the integrand is
    /// below `e^{-LOG_DROP}` times its peak, and the log of that peak.
    fn support(&self, upper_cut: Option<f64>) -> Option<(f64, f64, f64)> {
        let n = ((SCAN_HI - SCAN_LO) / SCAN_STEP).round() as usize;
        let grid: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let s = SCAN_LO + i as f64 * SCAN_STEP;
                (s, self.eval(s))
            })
            .collect();
        let (imax, _) = grid
            .iter()
            .enumerate()
            .filter(|(_, (_, v))| v.is_finite())
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;

        // bracket the maximum, walking off the grid when it sits on an edge
        let (mut left, mut right) = (grid[imax.saturating_sub(1)].0, grid[(imax + 1).min(n)].0);
        if imax == 0 {
            left = self.walk_to_peak(grid[0].0, -1.0, S_FLOOR);
        }
        if imax == n {
            right = self.walk_to_peak(grid[n].0, 1.0, S_CEIL);
        }
        let (s_peak, peak) = self.golden_max(left, right);
        let peak = peak.max(grid[imax].1);
        let cut = peak - LOG_DROP;

        let first_above = grid.iter().position(|&(s, v)| v >= cut || s >= s_peak);
        let last_above = grid.iter().rposition(|&(s, v)| v >= cut || s <= s_peak);

        let lo = match first_above {
            Some(i) if i > 0 => {
                let inside = grid[i].0.min(s_peak);
                self.bisect_cut(grid[i - 1].0, inside, cut)
            }
            _ => {
                let inside = grid[0].0.min(s_peak);
                let outside = self.walk_below(inside, -1.0, cut, S_FLOOR);
                self.bisect_cut(outside, inside, cut)
            }
        };
        let hi = match last_above {
            Some(i) if i < n => {
                let inside = grid[i].0.max(s_peak);
                self.bisect_cut(grid[i + 1].0, inside, cut)
            }
            _ => {
                let inside = grid[n].0.max(s_peak);
                let outside = self.walk_below(inside, 1.0, cut, S_CEIL);
                self.bisect_cut(outside, inside, cut)
            }
        };
        let hi = match upper_cut {
            Some(lam) => hi.min(lam.ln()),
            None => hi,
        };
        (lo < hi).then_some((lo, hi, peak))
    }

    fn walk_to_peak(&self, start: f64, dir: f64, limit: f64) -> f64 {
        let mut s = start;
        let mut v = self.eval(s);
        let mut step = 1.0;
        loop {
            let next = s + dir * step;
            if (next - limit) * dir >= 0.0 {
                return limit;
            }
            let nv = self.eval(next);
            if !(nv > v) {
                return next;
            }
            s = next;
            v = nv;
            step *= 2.0;
        }
    }

    fn walk_below(&self, start: f64, dir: f64, cut: f64, limit: f64) -> f64 {
        let mut s = start;
        let mut step = 1.0;
        loop {
            s += dir * step;
            if (s - limit) * dir >= 0.0 {
                return limit;
            }
            if !(self.eval(s) >= cut) {
                return s;
            }
            step *= 2.0;
        }
    }

    fn golden_max(&self, mut a: f64, mut b: f64) -> (f64, f64) {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = self.eval(c);
        let mut fd = self.eval(d);
        for _ in 0..60 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.eval(d);
            }
            if (b - a).abs() < 1e-10 {
                break;
            }
        }
        if fc > fd {
            (c, fc)
        } else {
            (d, fd)
        }
    }

    /// Point between `outside` (value below `cut`) and `inside` where the
    /// integrand crosses `cut`; biased outward.
    fn bisect_cut(&self, mut outside: f64, mut inside: f64, cut: f64) -> f64 {
        for _ in 0..40 {
            let mid = 0.5 * (outside + inside);
            if self.eval(mid) >= cut {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        outside
    }

    /// `(v, v', v'')` at `s`.
    fn derivatives(&self, s: f64) -> (f64, f64, f64) {
        let lam = s.exp();
        let mut d1 = 1.0 - self.decay * lam;
        let mut d2 = -self.decay * lam;
        if self.x > 0.0 {
            d1 += self.x * phi(lam);
            d2 += self.x * psi(lam);
        }
        if self.a_minus_one != 0.0 {
            d1 += self.a_minus_one * phi(self.c * lam);
            d2 += self.a_minus_one * psi(self.c * lam);
        }
        (self.eval(s), d1, d2)
    }

    /// Strict concavity in `s`: `v''` is bounded by
    /// `λ[(1-a)c/2 - K - bc]`, so `c(1 - a - 2b) <= 2K` suffices.
    fn is_concave(&self) -> bool {
        let k = self.decay - self.bc;
        self.a_minus_one >= 0.0 || -self.a_minus_one * self.c - 2.0 * self.bc <= 2.0 * k
    }

    /// Unique maximiser of a concave integrand by safeguarded Newton.
    fn concave_peak(&self) -> Option<f64> {
        let guess = ((self.x + self.a_minus_one + 1.0) / self.decay).ln();
        let (mut left, mut right) = (guess, guess);
        let mut step = 1.0;
        if self.derivatives(guess).1 > 0.0 {
            loop {
                right += step;
                if right > S_CEIL {
                    return None;
                }
                if self.derivatives(right).1 <= 0.0 {
                    break;
                }
                left = right;
                step *= 2.0;
            }
        } else {
            loop {
                left -= step;
                if left < S_FLOOR {
                    return None;
                }
                if self.derivatives(left).1 >= 0.0 {
                    break;
                }
                right = left;
                step *= 2.0;
            }
        }
        let mut s = 0.5 * (left + right);
        for _ in 0..100 {
            let (_, d1, d2) = self.derivatives(s);
            if d1 == 0.0 {
                return Some(s);
            }
            if d1 > 0.0 {
                left = s;
            } else {
                right = s;
            }
            let newton = s - d1 / d2;
            let next = if d2 < 0.0 && newton > left && newton < right {
                newton
            } else {
                0.5 * (left + right)
            };
            if (next - s).abs() <= 1e-13 * (1.0 + s.abs()) || right - left <= 1e-13 * (1.0 + s.abs()) {
                return Some(next);
            }
            s = next;
        }
        Some(s)
    }

    /// Peak value, curvature width and the range outside of which a concave
    /// integrand is below `e^{-LOG_DROP}` of its peak.
    fn concave_frame(&self) -> Option<Frame> {
        if !self.is_concave() {
            return None;
        }
        let s_peak = self.concave_peak()?;
        let (peak, _, d2) = self.derivatives(s_peak);
        if !(peak.is_finite() && d2 < 0.0) {
            return None;
        }
        let width = 1.0 / (-d2).sqrt();
        let cut = peak - LOG_DROP;
        let mut ends = [0.0; 2];
        for (end, dir) in ends.iter_mut().zip([-1.0, 1.0]) {
            let mut dist = 8.0 * width;
            loop {
                let t = s_peak + dir * dist;
                if !(S_FLOOR..=S_CEIL).contains(&t) {
                    return None;
                }
                if !(self.eval(t) >= cut) {
                    *end = t;
                    break;
                }
                dist *= 1.5;
            }
        }
        Some(Frame {
            peak,
            width,
            lo: ends[0],
            hi: ends[1],
        })
    }

    /// `ln ∫ e^{v(s)} ds` by the concave trapezoid route, or `None`.
    fn concave_log_integral(&self) -> Option<f64> {
        shared_concave_log_integrals(std::slice::from_ref(self)).map(|v| v[0])
    }
}

struct Frame {
    peak: f64,
    width: f64,
    lo: f64,
    hi: f64,
}

/// `ln ∫ e^{v_i(s)} ds` for integrands sharing `a` and `c`, on one trapezoid
/// grid. The rule converges geometrically for analytic integrands decaying at
/// both ends; the step is halved until every integral changes by at most
/// [`TRAPEZOID_RTOL`]. `None` when any integrand is not known to be concave
/// or the node budget runs out.
fn shared_concave_log_integrals(items: &[LogIntegrand]) -> Option<Vec<f64>> {
    let frames = items
        .iter()
        .map(LogIntegrand::concave_frame)
        .collect::<Option<Vec<_>>>()?;
    let lo = frames.iter().map(|f| f.lo).fold(f64::INFINITY, f64::min);
    let hi = frames.iter().map(|f| f.hi).fold(f64::NEG_INFINITY, f64::max);
    let target = frames
        .iter()
        .map(|f| (0.5 * f.width).min(0.5))
        .fold(f64::INFINITY, f64::min);
    let mut n = ((hi - lo) / target).ceil() as usize;
    if n > MAX_TRAPEZOID_NODES {
        return None;
    }
    let mut h = (hi - lo) / n as f64;
    let (a_minus_one, c) = (items[0].a_minus_one, items[0].c);
    let any_x = items.iter().any(|it| it.x > 0.0);

    let add_node = |t: f64, weight: f64, acc: &mut [f64]| {
        let lam = t.exp();
        let l1 = if any_x { log1mexp(lam) } else { 0.0 };
        let l2 = if a_minus_one != 0.0 { log1mexp(c * lam) } else { 0.0 };
        for ((it, fr), slot) in items.iter().zip(&frames).zip(acc.iter_mut()) {
            let mut v = t - it.decay * lam;
            if it.x > 0.0 {
                v += it.x * l1;
            }
            if a_minus_one != 0.0 {
                v += a_minus_one * l2;
            }
            *slot += weight * (v - fr.peak).exp();
        }
    };

    // `sums` hold the trapezoid node sums for step `h`.
    let mut sums = vec![0.0; items.len()];
    add_node(lo, 0.5, &mut sums);
    add_node(hi, 0.5, &mut sums);
    for i in 1..n {
        add_node(lo + i as f64 * h, 1.0, &mut sums);
    }
    loop {
        if 2 * n > MAX_TRAPEZOID_NODES {
            return None;
        }
        let mut mids = vec![0.0; items.len()];
        for i in 0..n {
            add_node(lo + (i as f64 + 0.5) * h, 1.0, &mut mids);
        }
        let coarse: Vec<f64> = sums.iter().map(|v| v * h).collect();
        for (s, m) in sums.iter_mut().zip(&mids) {
            *s += m;
        }
        n *= 2;
        h *= 0.5;
        let settled = sums
            .iter()
            .zip(&coarse)
            .all(|(s, c)| ((s * h - c) / (s * h)).abs() <= TRAPEZOID_RTOL);
        if settled {
            return Some(
                items
                    .iter()
                    .zip(&frames)
                    .zip(&sums)
                    .map(|((it, fr), s)| it.constant + fr.peak + (s * h).ln())
                    .collect(),
            );
        }
    }
}

/// Outcome of [`total_mass`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub mass: f64,
    /// Largest `x` included in the sum.
    pub x_used: u64,
    pub converged: bool,
}

/// Sums the pmf from `x = 0` until ten consecutive terms fall below
/// `tail_tol * mass`, or until `x_cap`.
pub fn total_mass(p: &GnbBeParams, tail_tol: f64, x_cap: u64) -> Result<MassReport> {
    if !(tail_tol > 0.0 && tail_tol <= 1e-2) {
        return domain(format!("tail_tol must lie in (0, 1e-2], got {tail_tol}"));
    }
    if x_cap < 1 {
        return domain("x_cap must be at least 1");
    }
    if let Some(n) = p.support_max() {
        let last = n.min(x_cap);
        let mut mass = 0.0;
        for x in 0..=last {
            mass += gnbbe_log_pmf(p, x)?.prob();
        }
        return Ok(MassReport {
            mass,
            x_used: last,
            converged: last == n,
        });
    }
    let mut mass = 0.0;
    let mut small_run = 0;
    for x in 0..=x_cap {
        let term = gnbbe_log_pmf(p, x)?.prob();
        mass += term;
        if term < tail_tol * mass {
            small_run += 1;
            if small_run == 10 {
                return Ok(MassReport {
                    mass,
                    x_used: x,
                    converged: true,
                });
            }
        } else {
            small_run = 0;
        }
    }
    Ok(MassReport {
        mass,
        x_used: x_cap,
        converged: false,
    })
}
