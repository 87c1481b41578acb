use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FrequencyTable;
use crate::distributions::{gnbbe_log_pmf, gnbbe_log_pmf_many, nbbe_log_pmf, total_mass, GnbBeParams, DEFAULT_X_CAP};
use crate::error::{domain, Error, Result};
use crate::specfun::{log_binomial, log_gamma};

/// The four fitted count models.
///
/// Parameter layouts: Poisson `λ`; NB `(r, p)`; NB-BE `(m, a, b, c)`;
/// GNB-BE `(m, a, b, c, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Poisson,
    #[serde(rename = "nb")]
    NegativeBinomial,
    NbBe,
    GnbBe,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Poisson,
        ModelKind::NegativeBinomial,
        ModelKind::NbBe,
        ModelKind::GnbBe,
    ];

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Poisson => &["lambda"],
            ModelKind::NegativeBinomial => &["r", "p"],
            ModelKind::NbBe => &["m", "a", "b", "c"],
            ModelKind::GnbBe => &["m", "a", "b", "c", "beta"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    /// Short machine name, as accepted on the command line.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Poisson => "poisson",
            ModelKind::NegativeBinomial => "nb",
            ModelKind::NbBe => "nbbe",
            ModelKind::GnbBe => "gnbbe",
        }
    }

    /// Column label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Poisson => "PD",
            ModelKind::NegativeBinomial => "NB",
            ModelKind::NbBe => "NB-BE",
            ModelKind::GnbBe => "GNB-BE",
        }
    }

    pub(crate) fn check_len(self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return domain(format!(
                "{} takes {} parameters, got {}",
                self.name(),
                self.n_params(),
                params.len()
            ));
        }
        Ok(())
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "pd" => Ok(ModelKind::Poisson),
            "nb" | "negbin" | "negative-binomial" => Ok(ModelKind::NegativeBinomial),
            "nbbe" | "nb-be" => Ok(ModelKind::NbBe),
            "gnbbe" | "gnb-be" => Ok(ModelKind::GnbBe),
            _ => domain(format!("unknown model {s:?}")),
        }
    }
}

/// `ln[e^{-λ} λ^x / x!]`.
pub fn poisson_log_pmf(lambda: f64, x: u64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return domain(format!("lambda must be finite and positive, got {lambda}"));
    }
    let xf = x as f64;
    let log_power = if x == 0 { 0.0 } else { xf * lambda.ln() };
    Ok(-lambda + log_power - log_gamma(xf + 1.0)?)
}

/// `ln[C(r+x-1, x) p^r (1-p)^x]`, with `p` the success probability.
pub fn nb_log_pmf(r: f64, p: f64, x: u64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return domain(format!("r must be finite and positive, got {r}"));
    }
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    let log_tail = if x == 0 { 0.0 } else { x as f64 * (-p).ln_1p() };
    Ok(log_binomial(r + x as f64 - 1.0, x)? + r * p.ln() + log_tail)
}

fn gnbbe_from(kind: ModelKind, params: &[f64]) -> Result<GnbBeParams> {
    match kind {
        ModelKind::NbBe => GnbBeParams::new(params[0], 1.0, params[1], params[2], params[3]),
        ModelKind::GnbBe => {
            if params[4] < 1.0 {
                return domain(format!("beta must be at least 1 for fitting, got {}", params[4]));
            }
            GnbBeParams::new(params[0], params[4], params[1], params[2], params[3])
        }
        _ => unreachable!("count-only models have no mixing law"),
    }
}

/// Log-pmf of `kind` at `x`.
pub fn model_log_pmf(kind: ModelKind, params: &[f64], x: u64) -> Result<f64> {
    kind.check_len(params)?;
    match kind {
        ModelKind::Poisson => poisson_log_pmf(params[0], x),
        ModelKind::NegativeBinomial => nb_log_pmf(params[0], params[1], x),
        ModelKind::NbBe => nbbe_log_pmf(params[0], params[1], params[2], params[3], x),
        ModelKind::GnbBe => Ok(gnbbe_log_pmf(&gnbbe_from(kind, params)?, x)?.log_prob),
    }
}

/// `Σ f_x ln p(x)` over the table; `-∞` if a cell with positive frequency has
/// zero probability.
pub fn log_likelihood(kind: ModelKind, params: &[f64], data: &FrequencyTable) -> Result<f64> {
    kind.check_len(params)?;
    if matches!(kind, ModelKind::NbBe | ModelKind::GnbBe) {
        let cells: Vec<(u64, u64)> = data.cells().iter().copied().filter(|c| c.1 > 0).collect();
        let xs: Vec<u64> = cells.iter().map(|c| c.0).collect();
        let evals = gnbbe_log_pmf_many(&gnbbe_from(kind, params)?, &xs)?;
        let mut total = 0.0;
        for (&(_, freq), e) in cells.iter().zip(evals) {
            if e.log_prob == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += freq as f64 * e.log_prob;
        }
        return Ok(total);
    }
    let mut total = 0.0;
    for &(x, freq) in data.cells() {
        if freq == 0 {
            continue;
        }
        let lp = model_log_pmf(kind, params, x)?;
        if lp == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total += freq as f64 * lp;
    }
    Ok(total)
}

/// Total probability of the model over its support.
///
/// Poisson and NB are exactly 1. The mixtures are summed until the tail
/// falls below `tail_tol` relative to the mass; heavy tails that hit the
/// summation cap return the partial (lower-bound) sum.
pub fn model_total_mass(kind: ModelKind, params: &[f64], tail_tol: f64) -> Result<f64> {
    kind.check_len(params)?;
    match kind {
        ModelKind::Poisson | ModelKind::NegativeBinomial => Ok(1.0),
        _ => Ok(total_mass(&gnbbe_from(kind, params)?, tail_tol, DEFAULT_X_CAP)?.mass),
    }
}

/// Expected frequencies `N·p(x)` for each cell, followed by a tail cell
/// `N·(mass - Σ p(x))` floored at zero.
pub fn expected_frequencies(kind: ModelKind, params: &[f64], data: &FrequencyTable) -> Result<Vec<f64>> {
    let mass = model_total_mass(kind, params, crate::distributions::DEFAULT_TAIL_TOL)?;
    expected_with_mass(kind, params, data, mass)
}

pub(crate) fn expected_with_mass(
    kind: ModelKind,
    params: &[f64],
    data: &FrequencyTable,
    mass: f64,
) -> Result<Vec<f64>> {
    let n = data.total_n() as f64;
    let mut out = Vec::with_capacity(data.cells().len() + 1);
    let mut listed = 0.0;
    for &(x, _) in data.cells() {
        let p = model_log_pmf(kind, params, x)?.exp();
        listed += p;
        out.push(n * p);
    }
    out.push((n * (mass - listed)).max(0.0));
    Ok(out)
}

/// Maps parameters to the unconstrained search space: log for positive
/// parameters, logit for `p`, and `ln(β - 1)` for `β`.
///
/// `β = 1` maps to `-∞`.
pub fn to_unconstrained(kind: ModelKind, params: &[f64]) -> Result<Vec<f64>> {
    kind.check_len(params)?;
    let mut z = Vec::with_capacity(params.len());
    for (i, (&v, name)) in params.iter().zip(kind.param_names()).enumerate() {
        let zi = match (kind, i) {
            (ModelKind::NegativeBinomial, 1) => {
                if !(v > 0.0 && v < 1.0) {
                    return domain(format!("p must lie in (0, 1), got {v}"));
                }
                v.ln() - (-v).ln_1p()
            }
            (ModelKind::GnbBe, 4) => {
                if !(v.is_finite() && v >= 1.0) {
                    return domain(format!("beta must be at least 1, got {v}"));
                }
                (v - 1.0).ln()
            }
            _ => {
                if !(v.is_finite() && v > 0.0) {
                    return domain(format!("{name} must be finite and positive, got {v}"));
                }
                v.ln()
            }
        };
        z.push(zi);
    }
    Ok(z)
}

/// Inverse of [`to_unconstrained`].
pub fn from_unconstrained(kind: ModelKind, z: &[f64]) -> Vec<f64> {
    z.iter()
        .enumerate()
        .map(|(i, &zi)| match (kind, i) {
            (ModelKind::NegativeBinomial, 1) => {
                if zi >= 0.0 {
                    1.0 / (1.0 + (-zi).exp())
                } else {
                    let e = zi.exp();
                    e / (1.0 + e)
                }
            }
            (ModelKind::GnbBe, 4) => 1.0 + zi.exp(),
            _ => zi.exp(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Discrete, NegativeBinomial, Poisson};

    fn table1() -> FrequencyTable {
        FrequencyTable::from_frequencies(&[7840, 1317, 239, 42, 14, 4, 4, 1]).unwrap()
    }

    #[test]
    fn count_pmfs_match_reference() {
        assert!((poisson_log_pmf(0.214354, 0).unwrap() + 0.214354).abs() < 1e-14);
        assert!((nb_log_pmf(1.0, 0.3, 2).unwrap() - (0.3f64 * 0.49).ln()).abs() < 1e-14);
        let pd = Poisson::new(3.7).unwrap();
        let nb = NegativeBinomial::new(2.5, 0.35).unwrap();
        for x in 0..40u64 {
            assert!((poisson_log_pmf(3.7, x).unwrap() - pd.ln_pmf(x)).abs() < 1e-11);
            assert!((nb_log_pmf(2.5, 0.35, x).unwrap() - nb.ln_pmf(x)).abs() < 1e-11);
        }
        assert!(poisson_log_pmf(0.0, 1).is_err());
        assert!(nb_log_pmf(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn nb_parameterization_mean() {
        let (r, p): (f64, f64) = (0.701512, 0.765955);
        assert!((r * (1.0 - p) / p - 2028.0 / 9461.0).abs() < 1e-5);
    }

    #[test]
    fn table1_log_likelihoods() {
        let data = table1();
        let cases: [(ModelKind, &[f64], f64); 4] = [
            (ModelKind::Poisson, &[0.214354], -5490.78),
            (ModelKind::NegativeBinomial, &[0.701512, 0.765955], -5348.04),
            (ModelKind::NbBe, &[1.77119, 1.96502, 7.97405, 2.10205], -5343.80),
            (ModelKind::GnbBe, &[2.10804, 1.9639, 4.1643, 4.58003, 1.09817], -5343.60),
        ];
        for (kind, params, want) in cases {
            let ll = log_likelihood(kind, params, &data).unwrap();
            assert!((ll - want).abs() < 0.5, "{kind}: {ll}");
        }
    }

    #[test]
    fn expected_sums_to_mass() {
        let data = table1();
        let params = [2.10804, 1.9639, 4.1643, 4.58003, 1.09817];
        let mass = model_total_mass(ModelKind::GnbBe, &params, 1e-12).unwrap();
        let e = expected_frequencies(ModelKind::GnbBe, &params, &data).unwrap();
        assert_eq!(e.len(), 9);
        assert!((e.iter().sum::<f64>() - 9461.0 * mass).abs() < 1e-6);
        let tiny = expected_frequencies(ModelKind::Poisson, &[1e-12], &data).unwrap();
        assert!((tiny[0] - 9461.0).abs() < 1e-6);
    }

    #[test]
    fn model_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("nosuch".parse::<ModelKind>().is_err());
    }

    #[test]
    fn beta_boundary_maps_to_negative_infinity() {
        let z = to_unconstrained(ModelKind::GnbBe, &[1.0, 2.0, 3.0, 4.0, 1.0]).unwrap();
        assert_eq!(z[4], f64::NEG_INFINITY);
        assert_eq!(from_unconstrained(ModelKind::GnbBe, &z)[4], 1.0);
        assert!(to_unconstrained(ModelKind::GnbBe, &[1.0, 2.0, 3.0, 4.0, 0.5]).is_err());
    }
}
