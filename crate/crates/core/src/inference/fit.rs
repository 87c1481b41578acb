use rayon::prelude::*;
use serde::Serialize;

use super::models::{expected_with_mass, from_unconstrained, log_likelihood, model_total_mass, to_unconstrained};
use super::optimize::{gradient_polish, nelder_mead_restarts, Minimum};
use super::{FrequencyTable, ModelKind};
use crate::distributions::{be_log_mgf, BeParams, DEFAULT_TAIL_TOL};
use crate::error::{domain, Error, Result};
use crate::sampling::{sample_standard_normal, RandomSource};

/// Search settings for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub n_starts: usize,
    /// Nelder–Mead iteration cap per start.
    pub max_iters: usize,
    /// Relative change in log-likelihood treated as convergence.
    pub f_tol: f64,
    /// Seeds the jitter of every start after the first.
    pub seed: u64,
    /// Tail tolerance for the reported total mass.
    pub tail_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_starts: 20,
            max_iters: 5000,
            f_tol: 1e-9,
            seed: 0,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.n_starts < 1 {
            return domain("n_starts must be at least 1");
        }
        if !(self.f_tol > 0.0 && self.f_tol.is_finite()) {
            return domain(format!("f_tol must be positive, got {}", self.f_tol));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol <= 1e-2) {
            return domain(format!("tail_tol must lie in (0, 1e-2], got {}", self.tail_tol));
        }
        Ok(())
    }
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: ModelKind,
    /// In the layout of [`ModelKind::param_names`].
    pub params: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// One entry per table cell, then the tail beyond the largest count.
    pub expected: Vec<f64>,
    /// Below 1 when the fitted law is mass-deficient.
    pub total_mass: f64,
    pub converged: bool,
    pub n_evals: usize,
    pub starts_used: usize,
    pub seed: u64,
    /// GNB-BE only: the nested β = 1 fit was at least as good, so β is reported as 1.
    pub beta_at_boundary: bool,
}

impl FitResult {
    pub fn k(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        let i = self.model.param_names().iter().position(|n| *n == name)?;
        self.params.get(i).copied()
    }

    /// `(name, value)` pairs in layout order.
    pub fn named_params(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.model
            .param_names()
            .iter()
            .copied()
            .zip(self.params.iter().copied())
    }
}

fn information_criteria(k: usize, loglik: f64, n: u64) -> (f64, f64) {
    let k = k as f64;
    (2.0 * k - 2.0 * loglik, k * (n as f64).ln() - 2.0 * loglik)
}

fn assemble(
    model: ModelKind,
    params: Vec<f64>,
    loglik: f64,
    data: &FrequencyTable,
    converged: bool,
    n_evals: usize,
    starts_used: usize,
    opts: &FitOptions,
) -> Result<FitResult> {
    let (aic, bic) = information_criteria(params.len(), loglik, data.total_n());
    let (total_mass, expected) = if loglik.is_finite() {
        let mass = model_total_mass(model, &params, opts.tail_tol)?;
        (mass, expected_with_mass(model, &params, data, mass)?)
    } else {
        (f64::NAN, vec![f64::NAN; data.cells().len() + 1])
    };
    Ok(FitResult {
        model,
        params,
        loglik,
        aic,
        bic,
        expected,
        total_mass,
        converged,
        n_evals,
        starts_used,
        seed: opts.seed,
        beta_at_boundary: false,
    })
}

/// Moment-matched first start: NB by mean and variance, the mixtures with
/// `a = b = 2`, `c = 1` and `m` solving the mean equation.
fn first_start(kind: ModelKind, data: &FrequencyTable) -> Vec<f64> {
    let mean = data.mean().max(1e-3);
    let var = data.variance();
    match kind {
        ModelKind::Poisson => vec![mean],
        ModelKind::NegativeBinomial => {
            let p = (mean / var).clamp(0.01, 0.99);
            vec![mean * p / (1.0 - p), p]
        }
        ModelKind::NbBe | ModelKind::GnbBe => {
            let beta = if kind == ModelKind::GnbBe { 1.1 } else { 1.0 };
            let be = BeParams::new(2.0, 2.0, 1.0).expect("valid constants");
            // E[e^λ] = 3 for these constants, so the mean is m (3 - β).
            let r1 = be_log_mgf(&be, 1.0).expect("t below bc").exp();
            let m = mean / (r1 - beta);
            let mut v = vec![m, 2.0, 2.0, 1.0];
            if kind == ModelKind::GnbBe {
                v.push(beta);
            }
            v
        }
    }
}

const START_JITTER: f64 = 1.0;
const POLISH_ITERS: usize = 100;
const POLISHED_STARTS: usize = 2;
/// Unconstrained coordinates beyond this are rejected outright.
const Z_LIMIT: f64 = 50.0;

fn search(kind: ModelKind, data: &FrequencyTable, opts: &FitOptions) -> Result<(Vec<Minimum>, Vec<f64>)> {
    let z0 = to_unconstrained(kind, &first_start(kind, data))?;
    let objective = |z: &[f64]| -> f64 {
        if z.iter().any(|v| !v.is_finite() || v.abs() > Z_LIMIT) {
            return f64::INFINITY;
        }
        match log_likelihood(kind, &from_unconstrained(kind, z), data) {
            Ok(ll) if ll.is_finite() => -ll,
            _ => f64::INFINITY,
        }
    };
    let starts: Vec<Vec<f64>> = (0..opts.n_starts)
        .map(|i| {
            if i == 0 {
                return z0.clone();
            }
            let mut rng = RandomSource::with_stream(opts.seed, i as u64);
            z0.iter()
                .map(|z| z + START_JITTER * sample_standard_normal(&mut rng))
                .collect()
        })
        .collect();
    let mut results: Vec<Minimum> = starts
        .par_iter()
        .map(|z| nelder_mead_restarts(objective, z, 0.5, opts.f_tol, opts.max_iters))
        .collect();
    // polish the leading starts, which also settle the convergence check
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&i, &j| results[i].f.total_cmp(&results[j].f).then(i.cmp(&j)));
    let polished: Vec<(usize, Minimum)> = order
        .iter()
        .take(POLISHED_STARTS)
        .map(|&i| (i, results[i].clone()))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, m)| (i, gradient_polish(objective, m, opts.f_tol, POLISH_ITERS)))
        .collect();
    for (i, m) in polished {
        results[i] = m;
    }
    Ok((results, z0))
}

struct Searched {
    params: Vec<f64>,
    loglik: f64,
    converged: bool,
    n_evals: usize,
}

fn best_of(kind: ModelKind, results: &[Minimum], f_tol: f64) -> Searched {
    let n_evals = results.iter().map(|m| m.evals).sum();
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&i, &j| results[i].f.total_cmp(&results[j].f).then(i.cmp(&j)));
    let best = &results[order[0]];
    let converged = if !best.f.is_finite() {
        false
    } else if results.len() == 1 {
        best.converged
    } else {
        let second = results[order[1]].f;
        (second - best.f).abs() <= 10.0 * f_tol * best.f.abs().max(1.0)
    };
    Searched {
        params: from_unconstrained(kind, &best.x),
        loglik: -best.f,
        converged,
        n_evals,
    }
}

/// Maximum-likelihood fit of `kind` to `data`.
///
/// Poisson is closed form. The other models run a Nelder–Mead multistart in
/// unconstrained coordinates followed by a gradient polish; GNB-BE also fits
/// the nested β = 1 model and keeps whichever is better. When no start
/// reaches a finite likelihood the result has `converged = false`.
pub fn fit(kind: ModelKind, data: &FrequencyTable, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    if kind == ModelKind::Poisson {
        let lambda = data.count_sum() as f64 / data.total_n() as f64;
        let ll = log_likelihood(kind, &[lambda], data)?;
        return assemble(kind, vec![lambda], ll, data, true, 1, 0, opts);
    }
    let (results, _) = search(kind, data, opts)?;
    let mut best = best_of(kind, &results, opts.f_tol);
    let mut starts_used = results.len();
    let mut boundary = false;
    if kind == ModelKind::GnbBe {
        let (nested_results, _) = search(ModelKind::NbBe, data, opts)?;
        let nested = best_of(ModelKind::NbBe, &nested_results, opts.f_tol);
        starts_used += nested_results.len();
        let n_evals = best.n_evals + nested.n_evals;
        if nested.loglik >= best.loglik || !best.loglik.is_finite() {
            let mut params = nested.params;
            params.push(1.0);
            best = Searched {
                params,
                loglik: nested.loglik,
                converged: nested.converged,
                n_evals,
            };
            boundary = true;
        } else {
            best.n_evals = n_evals;
        }
    }
    let mut out = assemble(
        kind,
        best.params,
        best.loglik,
        data,
        best.converged,
        best.n_evals,
        starts_used,
        opts,
    )?;
    out.beta_at_boundary = boundary;
    Ok(out)
}

/// Pearson goodness-of-fit summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    /// `cells - 1 - n_params`; may be zero or negative for saturated fits.
    pub df: i64,
    /// Number of cells after pooling.
    pub pooled_cells: usize,
}

/// Pearson χ² with trailing cells pooled until the pooled expected count
/// reaches `min_expected`.
///
/// `expected` has one entry per cell, optionally followed by a tail entry
/// (observed frequency zero) as produced by [`fit`].
pub fn chi_square_gof(
    observed: &FrequencyTable,
    expected: &[f64],
    min_expected: f64,
    n_params: usize,
) -> Result<GofResult> {
    let cells = observed.cells();
    let observed: Vec<f64> = cells.iter().map(|c| c.1 as f64).collect();
    chi_square_pooled(&observed, expected, min_expected, n_params)
}

/// [`chi_square_gof`] on raw observed counts. `expected` may be one entry
/// longer than `observed`; the extra entry is a tail with nothing observed.
pub fn chi_square_pooled(observed: &[f64], expected: &[f64], min_expected: f64, n_params: usize) -> Result<GofResult> {
    if expected.len() != observed.len() && expected.len() != observed.len() + 1 {
        return domain(format!(
            "expected has {} entries for {} observed cells",
            expected.len(),
            observed.len()
        ));
    }
    if expected.iter().any(|e| !(e.is_finite() && *e >= 0.0)) || expected.iter().sum::<f64>() <= 0.0 {
        return domain("expected counts must be finite, nonnegative and not all zero");
    }
    let mut pairs: Vec<(f64, f64)> = expected
        .iter()
        .enumerate()
        .map(|(i, &e)| (observed.get(i).copied().unwrap_or(0.0), e))
        .collect();

    let mut tail = (0.0, 0.0);
    while let Some(last) = pairs.pop() {
        tail = (tail.0 + last.0, tail.1 + last.1);
        if tail.1 >= min_expected {
            break;
        }
    }
    pairs.push(tail);
    if pairs.len() < 2 {
        return Err(Error::InvalidData("pooling left fewer than two cells".into()));
    }
    if pairs.iter().any(|p| p.1 == 0.0) {
        return domain("a pooled cell has zero expected count");
    }
    let statistic = pairs.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    Ok(GofResult {
        statistic,
        df: pairs.len() as i64 - 1 - n_params as i64,
        pooled_cells: pairs.len(),
    })
}

/// One row of a [`Comparison`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub model: ModelKind,
    pub result: std::result::Result<FitResult, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Successful fits by ascending AIC, then failures in input order.
    pub entries: Vec<ModelOutcome>,
    /// `ll(GNB-BE) >= ll(NB-BE) - f_tol·|ll|` when both were fitted.
    pub nesting_holds: Option<bool>,
}

impl Comparison {
    pub fn get(&self, model: ModelKind) -> Option<&FitResult> {
        self.entries
            .iter()
            .find(|e| e.model == model)
            .and_then(|e| e.result.as_ref().ok())
    }
}

/// Fits every model; a failing fit is recorded without aborting the others.
pub fn compare_models(data: &FrequencyTable, models: &[ModelKind], opts: &FitOptions) -> Result<Comparison> {
    if models.is_empty() {
        return domain("compare needs at least one model");
    }
    let mut entries: Vec<ModelOutcome> = models
        .iter()
        .map(|&model| ModelOutcome {
            model,
            result: fit(model, data, opts),
        })
        .collect();
    entries.sort_by(|x, y| match (&x.result, &y.result) {
        (Ok(a), Ok(b)) => a.aic.total_cmp(&b.aic),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => std::cmp::Ordering::Equal,
    });
    let mut out = Comparison {
        entries,
        nesting_holds: None,
    };
    if let (Some(g), Some(n)) = (out.get(ModelKind::GnbBe), out.get(ModelKind::NbBe)) {
        out.nesting_holds = Some(g.loglik >= n.loglik - opts.f_tol * n.loglik.abs().max(1.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> FrequencyTable {
        FrequencyTable::from_frequencies(&[7840, 1317, 239, 42, 14, 4, 4, 1]).unwrap()
    }

    #[test]
    fn poisson_is_closed_form() {
        let r = fit(ModelKind::Poisson, &table1(), &FitOptions::default()).unwrap();
        assert_eq!(r.params[0], 2028.0 / 9461.0);
        assert!((r.params[0] - 0.214354).abs() < 1e-5);
        assert!((r.loglik + 5490.78).abs() < 0.5);
        assert!((r.aic - (2.0 - 2.0 * r.loglik)).abs() < 1e-9);
        assert!((r.bic - (9461f64.ln() - 2.0 * r.loglik)).abs() < 1e-9);
        assert!((r.expected.iter().sum::<f64>() - 9461.0).abs() < 1e-6);
    }

    #[test]
    fn negative_binomial_fit_matches_table() {
        let r = fit(ModelKind::NegativeBinomial, &table1(), &FitOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.loglik + 5348.04).abs() < 0.05, "{}", r.loglik);
        assert!((r.params[0] - 0.701512).abs() < 1e-3);
        assert!((r.params[1] - 0.765955).abs() < 1e-3);
    }

    #[test]
    fn gof_examples() {
        let t = FrequencyTable::from_frequencies(&[10, 0, 5]).unwrap();
        let g = chi_square_gof(&t, &[10.0, 0.0, 5.0], 0.0, 0);
        // zero expected cell with min_expected 0 is rejected
        assert!(g.is_err());
        let t = FrequencyTable::new([(0, 10), (1, 0), (2, 1)]).unwrap();
        let g = chi_square_gof(&t, &[5.0, 5.0, 1.0], 5.0, 0).unwrap();
        assert_eq!(g.pooled_cells, 2);
        assert!((g.statistic - ((10.0 - 5.0f64).powi(2) / 5.0 + (1.0 - 6.0f64).powi(2) / 6.0)).abs() < 1e-12);

        let t = FrequencyTable::new([(0, 10), (1, 2), (3, 1)]).unwrap();
        let obs_equal: Vec<f64> = t.cells().iter().map(|c| c.1 as f64).collect();
        assert!(chi_square_gof(&t, &obs_equal, 0.5, 0).unwrap().statistic == 0.0);
        assert!(chi_square_gof(&t, &[1.0, 1.0, 1.0], 5.0, 0).is_err());
        assert!(chi_square_gof(&t, &[1.0, 1.0], 5.0, 0).is_err());
    }

    #[test]
    fn pooled_by_hand() {
        let g = chi_square_pooled(&[10.0, 0.0], &[5.0, 5.0], 5.0, 0).unwrap();
        assert_eq!(g.statistic, 10.0);
        assert_eq!((g.df, g.pooled_cells), (1, 2));
    }

    #[test]
    fn gof_two_cells_by_hand() {
        // frequency table requires two nonzero cells; use (10, 1) → stat by hand
        let t = FrequencyTable::new([(0, 10), (1, 1)]).unwrap();
        let g = chi_square_gof(&t, &[5.0, 6.0], 5.0, 1).unwrap();
        assert!((g.statistic - (25.0 / 5.0 + 25.0 / 6.0)).abs() < 1e-12);
        assert_eq!(g.df, 0);
    }

    #[test]
    fn single_model_comparison() {
        let c = compare_models(&table1(), &[ModelKind::Poisson], &FitOptions::default()).unwrap();
        assert_eq!(c.entries.len(), 1);
        assert_eq!(c.nesting_holds, None);
        assert!(compare_models(&table1(), &[], &FitOptions::default()).is_err());
    }

    #[test]
    fn rejects_zero_starts() {
        let opts = FitOptions {
            n_starts: 0,
            ..FitOptions::default()
        };
        assert!(fit(ModelKind::NegativeBinomial, &table1(), &opts).is_err());
    }
}
