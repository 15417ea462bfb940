//! Conditional laws, Pearson residuals, PIT histograms and information criteria.

use alloc::vec::Vec;

use crate::acf::{field_acf, AcfTable};
use crate::error::{Error, Result};
use crate::estimate::cml_loglik;
use crate::innovations::{InnovationDist, TAIL_MASS};
use crate::model::{CinarParams, CountGrid, Lag, SignPattern};
use crate::numeric::{binomial_pmf, sqrt, BinomialTable, CompensatedSum};

/// Conditional distribution of one site given its past.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionalPmf {
    pub site: Option<(usize, usize)>,
    /// `P(X = x)` for `x = 0..=support_max`.
    pub probs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl ConditionalPmf {
    fn from_probs(probs: Vec<f64>) -> Self {
        let mean = crate::numeric::sum_f64(probs.iter().enumerate().map(|(k, p)| k as f64 * p));
        let variance = crate::numeric::sum_f64(
            probs
                .iter()
                .enumerate()
                .map(|(k, p)| (k as f64 - mean) * (k as f64 - mean) * p),
        );
        Self {
            site: None,
            probs,
            mean,
            variance,
        }
    }

    pub fn support_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total_mass(&self) -> f64 {
        crate::numeric::sum_f64(self.probs.iter().copied())
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: usize) -> f64 {
        crate::numeric::sum_f64(self.probs.iter().take(x + 1).copied())
    }
}

/// One mixture component: weight, lagged value and sign of the thinned term.
struct Term {
    weight: f64,
    value: u32,
    sign: i64,
}

/// Law of `Y = sign * (alpha ∘ X_D) + eps` on `y_lo..=y_hi`, where `D` picks
/// a component with probability `weight`.
fn mixture_law(alpha: f64, terms: &[Term], innov: &[f64], y_lo: i64, y_hi: i64) -> Vec<f64> {
    let mut out = alloc::vec![0.0; (y_hi - y_lo + 1) as usize];
    for term in terms.iter().filter(|t| t.weight > 0.0) {
        let n = u64::from(term.value);
        for m in 0..=term.value as i64 {
            let b = term.weight * binomial_pmf(n, alpha, m);
            if b == 0.0 {
                continue;
            }
            for (k, &e) in innov.iter().enumerate() {
                let y = term.sign * m + k as i64;
                if y >= y_lo && y <= y_hi {
                    out[(y - y_lo) as usize] += b * e;
                }
            }
        }
    }
    out
}

fn innovation_cut(innovation: &InnovationDist) -> (usize, Vec<f64>) {
    let k = innovation.upper_quantile(TAIL_MASS);
    (k, innovation.pmf_table(k))
}

fn check_past(params: &CinarParams, past: &[u32]) -> Result<()> {
    params.validate().map_err(Error::InvalidParams)?;
    if past.len() != params.order.n_lags() {
        return Err(Error::Invalid(alloc::format!(
            "expected {} lagged values, got {}",
            params.order.n_lags(),
            past.len()
        )));
    }
    Ok(())
}

/// `P(X_{s,t} = x | past) = sum_y P(eps = y) sum_ij phi_ij B(X_{s-i,t-j}, alpha; x - y)`,
/// with `past` in lexicographic lag order. Support is cut where the neglected
/// mass is at most `1e-12`.
pub fn conditional_pmf(params: &CinarParams, past: &[u32]) -> Result<ConditionalPmf> {
    check_past(params, past)?;
    let (k, innov) = innovation_cut(&params.innovation);
    let top = past.iter().copied().max().unwrap_or(0) as i64 + k as i64;
    let terms: Vec<Term> = params
        .phi()
        .into_iter()
        .zip(past)
        .map(|(weight, &value)| Term {
            weight,
            value,
            sign: 1,
        })
        .collect();
    Ok(ConditionalPmf::from_probs(mixture_law(
        params.alpha(),
        &terms,
        &innov,
        0,
        top,
    )))
}

/// Closed-form conditional mean and variance:
/// `mu_eps + alpha sum phi X` and
/// `sigma2_eps + sum phi (alpha(1-alpha) X + alpha^2 X^2) - alpha^2 (sum phi X)^2`.
pub fn conditional_moments(params: &CinarParams, past: &[u32]) -> Result<(f64, f64)> {
    check_past(params, past)?;
    let alpha = params.alpha();
    let (mu_e, var_e) = params.innovation.moments();
    let phi = params.phi();
    Ok(moments_from(alpha, &phi, mu_e, var_e, past))
}

fn moments_from(alpha: f64, phi: &[f64], mu_e: f64, var_e: f64, past: &[u32]) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (&w, &x) in phi.iter().zip(past) {
        let x = f64::from(x);
        m1 += w * x;
        m2 += w * (alpha * (1.0 - alpha) * x + alpha * alpha * x * x);
    }
    (mu_e + alpha * m1, var_e + m2 - alpha * alpha * m1 * m1)
}

/// Conditional law of the censored field `X = max(0, Y)`,
/// `Y = sum_ij D_ij s(i,j) (alpha ∘ X_{s-i,t-j}) + eps`: mass of `Y <= 0` is
/// collected at zero.
pub fn tobit_conditional_pmf(
    params: &CinarParams,
    signs: &SignPattern,
    past: &[u32],
) -> Result<ConditionalPmf> {
    check_past(params, past)?;
    if signs.len() != params.order.n_lags() {
        return Err(Error::InvalidSigns(alloc::format!(
            "expected {} signs, got {}",
            params.order.n_lags(),
            signs.len()
        )));
    }
    let (k, innov) = innovation_cut(&params.innovation);
    let terms: Vec<Term> = params
        .phi()
        .into_iter()
        .zip(past)
        .zip(signs.signs())
        .map(|((weight, &value), s)| Term {
            weight,
            value,
            sign: s.value(),
        })
        .collect();
    let lo = terms
        .iter()
        .filter(|t| t.sign < 0)
        .map(|t| -i64::from(t.value))
        .min()
        .unwrap_or(0);
    let hi = terms
        .iter()
        .filter(|t| t.sign > 0)
        .map(|t| i64::from(t.value))
        .max()
        .unwrap_or(0)
        + k as i64;
    let y = mixture_law(params.alpha(), &terms, &innov, lo, hi);
    let zero_at = (-lo) as usize;
    let mut probs = alloc::vec![0.0; (hi.max(0) + 1) as usize];
    probs[0] = crate::numeric::sum_f64(y[..=zero_at].iter().copied());
    probs[1..].copy_from_slice(&y[zero_at + 1..]);
    Ok(ConditionalPmf::from_probs(probs))
}

/// Lag set `{(i,j) : -q1 <= i <= p1, -q2 <= j <= p2} \ {(0,0)}`, lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultilateralOrder {
    pub p1: usize,
    pub p2: usize,
    pub q1: usize,
    pub q2: usize,
}

impl MultilateralOrder {
    pub fn lags(&self) -> Vec<Lag> {
        let mut v = Vec::new();
        for i in -(self.q1 as isize)..=self.p1 as isize {
            for j in -(self.q2 as isize)..=self.p2 as isize {
                if (i, j) != (0, 0) {
                    v.push(Lag::new(i, j));
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultilateralParams {
    pub order: MultilateralOrder,
    pub theta: Vec<f64>,
    pub innovation: InnovationDist,
}

/// Conditional law of a site given all other sites, for the multilateral
/// model: the same single-convolution mixture over the two-sided lag set.
pub fn multilateral_conditional_pmf(
    params: &MultilateralParams,
    past: &[u32],
) -> Result<ConditionalPmf> {
    let n = params.order.lags().len();
    if params.theta.len() != n || past.len() != n {
        return Err(Error::Invalid(alloc::format!(
            "expected {n} coefficients and lagged values"
        )));
    }
    if params.theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Invalid("coefficients must be finite and non-negative".into()));
    }
    let alpha: f64 = params.theta.iter().sum();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(alloc::format!(
            "coefficients must sum into (0,1), got {alpha}"
        )));
    }
    params.innovation.check().map_err(Error::InvalidInnovation)?;
    let (k, innov) = innovation_cut(&params.innovation);
    let terms: Vec<Term> = params
        .theta
        .iter()
        .zip(past)
        .map(|(t, &value)| Term {
            weight: t / alpha,
            value,
            sign: 1,
        })
        .collect();
    let top = past.iter().copied().max().unwrap_or(0) as i64 + k as i64;
    Ok(ConditionalPmf::from_probs(mixture_law(alpha, &terms, &innov, 0, top)))
}

/// Pearson residuals over the sites with a complete past.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Residuals {
    /// `n1 - p1` rows.
    pub rows: usize,
    /// `n2 - p2` columns.
    pub cols: usize,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Divisor `n - 1`.
    pub variance: f64,
    pub acf: AcfTable,
}

pub const DEFAULT_RESIDUAL_WINDOW: usize = 2;

/// `r = (X - E[X | past]) / sqrt(Var[X | past])`, with the residual ACF over
/// `|k|, |l| <= window` (clipped to the residual grid).
pub fn pearson_residuals(params: &CinarParams, grid: &CountGrid, window: usize) -> Result<Residuals> {
    params.validate().map_err(Error::InvalidParams)?;
    let (p1, p2) = (params.order.p1(), params.order.p2());
    if grid.n1() <= p1 + 1 || grid.n2() <= p2 + 1 {
        return Err(Error::GridTooSmall {
            n1: grid.n1(),
            n2: grid.n2(),
            what: "residual diagnostics",
        });
    }
    let lags = params.lags();
    let alpha = params.alpha();
    let phi = params.phi();
    let (mu_e, var_e) = params.innovation.moments();
    let (rows, cols) = (grid.n1() - p1, grid.n2() - p2);
    let mut values = Vec::with_capacity(rows * cols);
    for s in p1..grid.n1() {
        for t in p2..grid.n2() {
            let past = grid.past(s, t, &lags);
            let (m, v) = moments_from(alpha, &phi, mu_e, var_e, &past);
            if !(v > 0.0) {
                return Err(Error::Invalid(alloc::format!(
                    "zero conditional variance at site ({s},{t})"
                )));
            }
            values.push((f64::from(grid.get(s, t)) - m) / sqrt(v));
        }
    }
    let n = values.len() as f64;
    let mean = crate::numeric::sum_f64(values.iter().copied()) / n;
    let variance =
        crate::numeric::sum_f64(values.iter().map(|r| (r - mean) * (r - mean))) / (n - 1.0);
    let acf = field_acf(&values, rows, cols, window.min(rows - 1), window.min(cols - 1))?;
    Ok(Residuals {
        rows,
        cols,
        values,
        mean,
        variance,
        acf,
    })
}

pub const DEFAULT_PIT_BINS: usize = 10;

/// Non-randomized mean PIT histogram with `bins` equal-width bins.
///
/// Each site contributes the piecewise-linear `F(u | x) = (u - F(x-1)) /
/// (F(x) - F(x-1))` clipped to `[0, 1]`, with `F` the conditional CDF; heights
/// are `bins (Fbar(j/bins) - Fbar((j-1)/bins))` and average 1.
pub fn pit_histogram(params: &CinarParams, grid: &CountGrid, bins: usize) -> Result<Vec<f64>> {
    params.validate().map_err(Error::InvalidParams)?;
    if bins < 2 {
        return Err(Error::Invalid("PIT needs at least two bins".into()));
    }
    let (p1, p2) = (params.order.p1(), params.order.p2());
    if grid.n1() <= p1 || grid.n2() <= p2 {
        return Err(Error::GridTooSmall {
            n1: grid.n1(),
            n2: grid.n2(),
            what: "PIT diagnostics",
        });
    }
    let lags = params.lags();
    let phi = params.phi();
    let max_x = grid.max() as usize;
    let innov = params.innovation.pmf_table(max_x);
    let binom = BinomialTable::new(max_x, params.alpha());
    let mut fbar: Vec<CompensatedSum> = alloc::vec![CompensatedSum::default(); bins + 1];
    let mut n_sites = 0usize;
    let mut pmf = Vec::with_capacity(max_x + 1);
    for s in p1..grid.n1() {
        for t in p2..grid.n2() {
            let past = grid.past(s, t, &lags);
            let x = grid.get(s, t) as usize;
            pmf.clear();
            for v in 0..=x {
                let mut p = 0.0;
                for (&w, &xp) in phi.iter().zip(&past) {
                    if w == 0.0 {
                        continue;
                    }
                    let row = binom.row(xp as usize);
                    let mut inner = 0.0;
                    for m in 0..=v.min(xp as usize) {
                        inner += row[m] * innov[v - m];
                    }
                    p += w * inner;
                }
                pmf.push(p);
            }
            let upper = crate::numeric::sum_f64(pmf.iter().copied()).min(1.0);
            let lower = (upper - pmf[x]).clamp(0.0, upper);
            for (j, acc) in fbar.iter_mut().enumerate() {
                let u = j as f64 / bins as f64;
                let v = if u <= lower {
                    0.0
                } else if u >= upper {
                    1.0
                } else {
                    (u - lower) / (upper - lower)
                };
                acc.add(v);
            }
            n_sites += 1;
        }
    }
    let f: Vec<f64> = fbar.iter().map(|a| a.value() / n_sites as f64).collect();
    Ok((1..=bins).map(|j| bins as f64 * (f[j] - f[j - 1])).collect())
}

/// Re-scaled information criteria: `l~ = (n1 n2 / n_ell) l_max`,
/// `AIC = -2 l~ + 2k`, `BIC = -2 l~ + ln(n1 n2) k`.
pub fn information_criteria(
    loglik_max: f64,
    n_params: usize,
    n1: usize,
    n2: usize,
    n_ell: usize,
) -> (f64, f64) {
    let n = (n1 * n2) as f64;
    let scaled = n / n_ell as f64 * loglik_max;
    let k = n_params as f64;
    (-2.0 * scaled + 2.0 * k, -2.0 * scaled + crate::numeric::ln(n) * k)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsReport {
    pub residual_mean: f64,
    pub residual_variance: f64,
    pub residual_acf: AcfTable,
    pub pit_bins: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

/// Residual summary, PIT histogram and information criteria of a fitted model
/// with `n_params` free parameters.
pub fn diagnostics_report(
    params: &CinarParams,
    grid: &CountGrid,
    n_params: usize,
    bins: usize,
    window: usize,
) -> Result<DiagnosticsReport> {
    let res = pearson_residuals(params, grid, window)?;
    let pit_bins = pit_histogram(params, grid, bins)?;
    let loglik = cml_loglik(params, grid)?;
    let n_ell = (grid.n1() - params.order.p1()) * (grid.n2() - params.order.p2());
    let (aic, bic) = information_criteria(loglik, n_params, grid.n1(), grid.n2(), n_ell);
    Ok(DiagnosticsReport {
        residual_mean: res.mean,
        residual_variance: res.variance,
        residual_acf: res.acf,
        pit_bins,
        loglik,
        aic,
        bic,
    })
}
