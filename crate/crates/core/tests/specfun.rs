use gnbbe::quadrature::GaussLegendre;
use gnbbe::sampling::RandomSource;
use gnbbe::specfun::{log_beta, log_binomial, log_gamma, signed_log_sum, Sign, SignedLogValue};
use proptest::prelude::*;

/// `∫_0^{1/2} t^{r-1} (1-t)^{s-1} dt` by Gauss–Legendre after `t = e^{-y}`,
/// which leaves the smooth integrand `e^{-ry} (1-e^{-y})^{s-1}` on
/// `[ln 2, ∞)`, taken in doubling chunks until they stop contributing.
fn half_beta_integral(r: f64, s: f64) -> f64 {
    let rule = GaussLegendre::new(20);
    let f = |y: f64| (-r * y + (s - 1.0) * (-(-y).exp()).ln_1p()).exp();
    let mut lo = std::f64::consts::LN_2;
    let mut width = (1.0 / r).min(1.0);
    let mut total = 0.0;
    loop {
        let part = rule.integrate(f, lo, lo + width, 50);
        total += part;
        lo += width;
        width *= 2.0;
        if part <= 1e-18 * total {
            return total;
        }
    }
}

fn beta_by_integral(r: f64, s: f64) -> f64 {
    half_beta_integral(r, s) + half_beta_integral(s, r)
}

#[test]
fn log_beta_agrees_with_numerical_integral() {
    let mut rng = RandomSource::new(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        // log-uniform on (0.01, 100)
        let r = 10f64.powf(-2.0 + 4.0 * rng.next_uniform());
        let s = 10f64.powf(-2.0 + 4.0 * rng.next_uniform());
        let want = beta_by_integral(r, s);
        let got = log_beta(r, s).unwrap().exp();
        let rel = ((got - want) / want).abs();
        worst = worst.max(rel);
        assert!(rel <= 1e-8, "B({r}, {s}): {got} vs {want}");
    }
    assert!(worst < 1e-8);
    eprintln!("worst log_beta relative error {worst:e}");
}

#[test]
fn log_gamma_recurrence_on_wide_grid() {
    for i in 0..=180 {
        let z = 10f64.powf(-4.0 + 9.0 * i as f64 / 180.0);
        let lhs = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap();
        // the two log-gammas carry rounding of their own magnitude
        let scale = log_gamma(z + 1.0).unwrap().abs().max(1.0);
        assert!((lhs - z.ln()).abs() <= 1e-12 * scale, "z = {z}");
    }
}

/// `Σ_j C(x,j) (-1)^j Γ(j+b)/Γ(j+a)` in signed log space.
fn binomial_gamma_sum(x: u64, a: f64, b: f64) -> (f64, f64) {
    let terms: Vec<SignedLogValue> = (0..=x)
        .map(|j| {
            let mag = log_binomial(x as f64, j).unwrap() + log_gamma(j as f64 + b).unwrap()
                - log_gamma(j as f64 + a).unwrap();
            SignedLogValue::new(if j % 2 == 0 { Sign::Positive } else { Sign::Negative }, mag)
        })
        .collect();
    let (sum, cancellation) = signed_log_sum(terms);
    (sum.to_f64(), cancellation)
}

#[test]
fn binomial_sum_of_gamma_ratios_identity() {
    let mut rng = RandomSource::new(12);
    for _ in 0..200 {
        let b = 0.05 + 5.0 * rng.next_uniform();
        let a = b + 0.05 + 5.0 * rng.next_uniform();
        for x in 0..=20u64 {
            let (got, cancellation) = binomial_gamma_sum(x, a, b);
            let want = (log_beta(x as f64 + a - b, b).unwrap() - log_gamma(a - b).unwrap()).exp();
            let rel = ((got - want) / want).abs();
            // floating-point terms carry ~1e-14 relative error each, which the
            // cancellation factor amplifies
            let tol = 1e-9f64.max(1e-13 * cancellation);
            assert!(
                rel <= tol,
                "x={x} a={a} b={b}: rel {rel:e}, cancellation {cancellation:e}"
            );
            if cancellation <= 1e4 {
                assert!(rel <= 1e-9);
            }
        }
    }
}

fn signed() -> impl Strategy<Value = SignedLogValue> {
    (any::<bool>(), -30.0f64..30.0)
        .prop_map(|(pos, mag)| SignedLogValue::new(if pos { Sign::Positive } else { Sign::Negative }, mag))
}

proptest! {
    #[test]
    fn signed_log_sum_is_permutation_invariant(
        terms in prop::collection::vec(signed(), 1..40),
        seed in any::<u64>(),
    ) {
        let (forward, cancellation) = signed_log_sum(terms.clone());
        prop_assume!(cancellation <= 1e6);
        let mut shuffled = terms.clone();
        let mut rng = RandomSource::new(seed);
        for i in (1..shuffled.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            shuffled.swap(i, j);
        }
        let (other, _) = signed_log_sum(shuffled);
        let (f, o) = (forward.to_f64(), other.to_f64());
        prop_assert!((f - o).abs() <= 1e-13 * f.abs(), "{} vs {}", f, o);
    }

    #[test]
    fn signed_value_round_trip_moderate(v in -1e20f64..1e20) {
        prop_assume!(v.abs() >= 1e-20);
        let back = SignedLogValue::from_f64(v).to_f64();
        prop_assert!((back - v).abs() <= 1e-14 * v.abs());
    }

    #[test]
    fn signed_value_round_trip(v in prop::num::f64::NORMAL) {
        let back = SignedLogValue::from_f64(v).to_f64();
        // storing ln|v| rounds at the ulp of ln|v|, so the error grows with it
        let tol = 1e-14 + 2.0 * f64::EPSILON * v.abs().ln().abs();
        prop_assert!((back - v).abs() <= tol * v.abs());
    }

    #[test]
    fn log_beta_is_symmetric(r in 1e-3f64..1e4, s in 1e-3f64..1e4) {
        let (x, y) = (log_beta(r, s).unwrap(), log_beta(s, r).unwrap());
        prop_assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0));
    }

    #[test]
    fn log_binomial_pascal_rule(n in 1.0f64..200.0, x in 1u64..50) {
        prop_assume!(n - x as f64 > 0.0);
        // C(n, x) = C(n-1, x-1) + C(n-1, x)
        let lhs = log_binomial(n, x).unwrap().exp();
        let rhs = log_binomial(n - 1.0, x - 1).unwrap().exp() + log_binomial(n - 1.0, x).unwrap().exp();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }
}
