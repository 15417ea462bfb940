//! Innovation distributions: Poisson, the law that induces a negative-binomial
//! marginal, and arbitrary finite tables.
//!
//! For the NB-inducing law with marginal `NB(nu, pi)` and dependence `alpha`,
//! write `a = 1 - pi`, `r = a (1 - alpha)`, `q = 1 - r`. Then
//!
//! ```text
//! P(eps = 0) = q^nu
//! P(eps = k) = sum_{j=1..k} C(nu, j) q^(nu-j) r^j C(k-1, k-j) a^(k-j) pi^j
//! ```
//!
//! with the generalized binomial coefficient `C(nu, j)`. [`InnovationDist::pmf`]
//! evaluates this sum in log space with a signed log-sum-exp. The same law is
//! compound Poisson, `ln pgf(u) = nu ln q + nu sum_m (a^m - b^m)/m u^m` with
//! `b = a alpha / q`, which gives the all-positive recursion
//! `P_k = nu/k sum_{m=1..k} (a^m - b^m) P_{k-m}` used for whole tables and as
//! the fallback when the signed sum cancels badly.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::numeric::{exp, ln, ln_gamma, ln_gamma_signed};

/// Stop extending an infinite-support table once this much mass is covered...
pub const TAIL_MASS: f64 = 1e-12;
/// ...and this many consecutive terms fall below [`TINY_TERM`].
const TAIL_RUN: usize = 10;
const TINY_TERM: f64 = 1e-16;
/// Tabulated PMFs must sum to one within this tolerance.
const TABLE_SUM_TOL: f64 = 1e-10;
/// Smallest accepted `I_eps - 1` when building NB innovations from targets.
const MIN_OVERDISPERSION: f64 = 1e-9;
/// Relative cancellation beyond which the signed sum is abandoned.
const MAX_CANCELLATION: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum InnovationDist {
    Poisson { mu: f64 },
    /// Innovations giving an `NB(nu, pi)` stationary marginal under dependence `alpha`.
    NbMarginal { nu: f64, pi: f64, alpha: f64 },
    /// Probabilities of `0..pmf.len()`.
    Tabulated { pmf: Vec<f64> },
}

impl InnovationDist {
    /// NB-marginal innovations with the given innovation mean and dispersion ratio.
    pub fn nb_from_targets(mu_eps: f64, i_eps: f64, alpha: f64) -> Result<Self> {
        let (nu, pi) = nb_params_from_targets(mu_eps, i_eps, alpha)?;
        Ok(Self::NbMarginal { nu, pi, alpha })
    }

    pub fn check(&self) -> core::result::Result<(), String> {
        match self {
            Self::Poisson { mu } => {
                if !(mu.is_finite() && *mu > 0.0) {
                    return Err(alloc::format!("Poisson mean must be positive, got {mu}"));
                }
            }
            Self::NbMarginal { nu, pi, alpha } => {
                if !(nu.is_finite() && *nu > 0.0) {
                    return Err(alloc::format!("nu must be positive, got {nu}"));
                }
                if !(*pi > 0.0 && *pi < 1.0) {
                    return Err(alloc::format!("pi must lie in (0,1), got {pi}"));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(alloc::format!("alpha must lie in (0,1), got {alpha}"));
                }
            }
            Self::Tabulated { pmf } => {
                if pmf.is_empty() {
                    return Err("empty PMF table".into());
                }
                if pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err("PMF entries must be finite and non-negative".into());
                }
                let s: f64 = pmf.iter().sum();
                if (s - 1.0).abs() > TABLE_SUM_TOL {
                    return Err(alloc::format!("PMF sums to {s}, not 1"));
                }
            }
        }
        Ok(())
    }

    /// `P(eps = k)`.
    pub fn pmf(&self, k: usize) -> f64 {
        match self {
            Self::Poisson { mu } => poisson_pmf(*mu, k),
            Self::NbMarginal { nu, pi, alpha } => nb_innovation_pmf(*nu, *pi, *alpha, k),
            Self::Tabulated { pmf } => pmf.get(k).copied().unwrap_or(0.0),
        }
    }

    /// `P(eps = k)` for `k = 0..=k_max`.
    pub fn pmf_table(&self, k_max: usize) -> Vec<f64> {
        match self {
            Self::Poisson { mu } => {
                let lmu = ln(*mu);
                let mut out = Vec::with_capacity(k_max + 1);
                let mut lf = 0.0;
                for k in 0..=k_max {
                    if k > 0 {
                        lf += ln(k as f64);
                    }
                    out.push(exp(-mu + k as f64 * lmu - lf));
                }
                out
            }
            Self::NbMarginal { nu, pi, alpha } => nb_pmf_recursive(*nu, *pi, *alpha, k_max),
            Self::Tabulated { pmf } => (0..=k_max)
                .map(|k| pmf.get(k).copied().unwrap_or(0.0))
                .collect(),
        }
    }

    /// Innovation mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            Self::Poisson { mu } => (*mu, *mu),
            Self::NbMarginal { nu, pi, alpha } => {
                let mu_x = nu * (1.0 - pi) / pi;
                let var_x = mu_x / pi;
                let mu_e = (1.0 - alpha) * mu_x;
                (mu_e, (1.0 - alpha * alpha) * var_x - alpha * mu_e)
            }
            Self::Tabulated { pmf } => {
                let m: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
                let m2: f64 = pmf
                    .iter()
                    .enumerate()
                    .map(|(k, p)| (k * k) as f64 * p)
                    .sum();
                (m, m2 - m * m)
            }
        }
    }

    /// Smallest `K` such that `P(eps <= K) >= 1 - 1e-12` and the ten terms
    /// after the mode region are all below `1e-16`; for tables, the last index.
    pub fn support_bound(&self) -> usize {
        if let Self::Tabulated { pmf } = self {
            return pmf.len() - 1;
        }
        let (m, v) = self.moments();
        let mut k_max = (m + 12.0 * crate::numeric::sqrt(v) + 20.0) as usize;
        loop {
            let table = self.pmf_table(k_max);
            if let Some(k) = truncation_point(&table) {
                return k;
            }
            k_max *= 2;
        }
    }

    /// Upper quantile `min{K : P(eps <= K) >= 1 - mass}`.
    pub fn upper_quantile(&self, mass: f64) -> usize {
        let table = self.pmf_table(self.support_bound());
        let mut cum = 0.0;
        for (k, p) in table.iter().enumerate() {
            cum += p;
            if cum >= 1.0 - mass {
                return k;
            }
        }
        table.len() - 1
    }

    pub fn sampler(&self) -> InnovationSampler {
        InnovationSampler::new(self)
    }
}

fn truncation_point(table: &[f64]) -> Option<usize> {
    let mut cum = 0.0;
    let mut run = 0;
    for (k, &p) in table.iter().enumerate() {
        cum += p;
        if p < TINY_TERM {
            run += 1;
        } else {
            run = 0;
        }
        if cum >= 1.0 - TAIL_MASS && run >= TAIL_RUN {
            return Some(k);
        }
    }
    None
}

fn poisson_pmf(mu: f64, k: usize) -> f64 {
    let kf = k as f64;
    exp(-mu + kf * ln(mu) - ln_gamma(kf + 1.0))
}

/// Solves the NB-marginal relations for `(nu, pi)` given the innovation mean,
/// dispersion ratio `I_eps = sigma2_eps / mu_eps` and dependence `alpha`.
pub fn nb_params_from_targets(mu_eps: f64, i_eps: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(mu_eps.is_finite() && mu_eps > 0.0) {
        return Err(Error::InvalidInnovation(alloc::format!(
            "innovation mean must be positive, got {mu_eps}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInnovation(alloc::format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    if !(i_eps - 1.0 > MIN_OVERDISPERSION) || !i_eps.is_finite() {
        return Err(Error::NotOverdispersed(i_eps));
    }
    // Marginal dispersion (alpha + I_eps)/(1 + alpha) = 1/pi.
    let pi = (1.0 + alpha) / (alpha + i_eps);
    let mu_x = mu_eps / (1.0 - alpha);
    let nu = mu_x * pi / (1.0 - pi);
    Ok((nu, pi))
}

/// Closed-form sum, signed log-sum-exp over `j`.
fn nb_innovation_pmf(nu: f64, pi: f64, alpha: f64, k: usize) -> f64 {
    let a = 1.0 - pi;
    let r = a * (1.0 - alpha);
    let q = 1.0 - r;
    let (lq, lr, la, lpi) = (ln(q), ln(r), ln(a), ln(pi));
    if k == 0 {
        return exp(nu * lq);
    }
    let lg_nu1 = ln_gamma(nu + 1.0);
    let kf = k as f64;
    let lg_k = ln_gamma(kf); // ln (k-1)!
    let mut terms: Vec<(f64, i32)> = Vec::with_capacity(k);
    for j in 1..=k {
        let jf = j as f64;
        let z = nu - jf + 1.0;
        if z <= 0.0 && z == libm::floor(z) {
            // Gamma pole: C(nu, j) = 0 for integer nu < j.
            continue;
        }
        let (lg_z, sign) = ln_gamma_signed(z);
        let ln_choose_nu = lg_nu1 - lg_z - ln_gamma(jf + 1.0);
        // C(k-1, k-j) = (k-1)! / ((k-j)! (j-1)!)
        let ln_choose_k = lg_k - ln_gamma(kf - jf + 1.0) - ln_gamma(jf);
        let lt = ln_choose_nu
            + (nu - jf) * lq
            + jf * lr
            + ln_choose_k
            + (kf - jf) * la
            + jf * lpi;
        terms.push((lt, sign));
    }
    let Some(max) = terms.iter().map(|t| t.0).reduce(f64::max) else {
        return 0.0;
    };
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let (mut pos, mut neg) = (0.0, 0.0);
    for (lt, s) in &terms {
        let v = exp(lt - max);
        if *s > 0 {
            pos += v;
        } else {
            neg += v;
        }
    }
    let diff = pos - neg;
    if neg > 0.0 && (diff <= 0.0 || (pos + neg) > MAX_CANCELLATION * diff) {
        return nb_pmf_recursive(nu, pi, alpha, k)[k];
    }
    (exp(max) * diff).max(0.0)
}

/// Compound-Poisson recursion, scaled to survive underflow of `q^nu`.
fn nb_pmf_recursive(nu: f64, pi: f64, alpha: f64, k_max: usize) -> Vec<f64> {
    let a = 1.0 - pi;
    let q = 1.0 - a * (1.0 - alpha);
    let b = a * alpha / q;
    // c[m] = a^m - b^m, m >= 1
    let mut c = vec![0.0; k_max + 1];
    let (mut am, mut bm) = (1.0, 1.0);
    for cm in c.iter_mut().skip(1) {
        am *= a;
        bm *= b;
        *cm = am - bm;
    }
    let mut r = vec![0.0; k_max + 1];
    r[0] = 1.0;
    let mut ln_scale = nu * ln(q);
    for k in 1..=k_max {
        let mut acc = 0.0;
        for m in 1..=k {
            acc += c[m] * r[k - m];
        }
        r[k] = nu / k as f64 * acc;
        if r[k] > 1e250 {
            for x in r[..=k].iter_mut() {
                *x *= 1e-250;
            }
            ln_scale += 250.0 * core::f64::consts::LN_10;
        }
    }
    r.iter()
        .map(|&x| if x > 0.0 { exp(ln(x) + ln_scale) } else { 0.0 })
        .collect()
}

/// Inverse-CDF sampler with a lazily extended table (Poisson uses a direct
/// sampler).
#[derive(Debug, Clone)]
pub struct InnovationSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Poisson(rand_distr::Poisson<f64>),
    Table { dist: InnovationDist, cdf: Vec<f64> },
}

impl InnovationSampler {
    fn new(dist: &InnovationDist) -> Self {
        let kind = match dist {
            InnovationDist::Poisson { mu } => SamplerKind::Poisson(
                rand_distr::Poisson::new(*mu).expect("validated Poisson mean"),
            ),
            other => {
                let k = other.support_bound();
                SamplerKind::Table {
                    dist: other.clone(),
                    cdf: cumulative(&other.pmf_table(k)),
                }
            }
        };
        Self { kind }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        match &mut self.kind {
            SamplerKind::Poisson(d) => d.sample(rng) as u32,
            SamplerKind::Table { dist, cdf } => {
                let u: f64 = rng.random();
                loop {
                    let idx = cdf.partition_point(|&c| c <= u);
                    if idx < cdf.len() {
                        return idx as u32;
                    }
                    if let InnovationDist::Tabulated { .. } = dist {
                        // Rounding left the table sum just under u.
                        return (cdf.len() - 1) as u32;
                    }
                    let k = 2 * cdf.len();
                    *cdf = cumulative(&dist.pmf_table(k));
                    if cdf.last().is_some_and(|&c| c <= u) && cdf.len() > 1 << 24 {
                        return (cdf.len() - 1) as u32;
                    }
                }
            }
        }
    }
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    pmf.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}
