//! Domain types: model order and lag set, parameters, sign patterns, count grids.
//!
//! Dependence parameters are stored as `theta` (`theta_ij = alpha * phi_ij`) in
//! lexicographic lag order; `(alpha, phi)` is always derived. Every vector,
//! matrix and column layout in the crate uses the order returned by
//! [`ModelOrder::lags`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::innovations::InnovationDist;

/// A spatial lag `(i, j)`; `X_{s-i, t-j}` is the lagged value at site `(s, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lag {
    pub i: isize,
    pub j: isize,
}

impl Lag {
    pub const fn new(i: isize, j: isize) -> Self {
        Self { i, j }
    }
}

impl fmt::Display for Lag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if (0..10).contains(&self.i) && (0..10).contains(&self.j) {
            write!(f, "theta{}{}", self.i, self.j)
        } else {
            write!(f, "theta({},{})", self.i, self.j)
        }
    }
}

/// Order `(p1, p2)` of a unilateral CINAR model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelOrder {
    p1: usize,
    p2: usize,
}

impl ModelOrder {
    pub fn new(p1: usize, p2: usize) -> Result<Self> {
        if p1 == 0 || p2 == 0 {
            return Err(Error::Invalid(alloc::format!(
                "model order must be positive, got ({p1},{p2})"
            )));
        }
        Ok(Self { p1, p2 })
    }

    pub const fn p1(&self) -> usize {
        self.p1
    }

    pub const fn p2(&self) -> usize {
        self.p2
    }

    /// The lag set `S`, lexicographic (i ascending, then j ascending).
    pub fn lags(&self) -> Vec<Lag> {
        let mut out = Vec::with_capacity(self.n_lags());
        for i in 0..=self.p1 as isize {
            for j in 0..=self.p2 as isize {
                if (i, j) != (0, 0) {
                    out.push(Lag::new(i, j));
                }
            }
        }
        out
    }

    pub const fn n_lags(&self) -> usize {
        (self.p1 + 1) * (self.p2 + 1) - 1
    }

    pub fn index_of(&self, lag: Lag) -> Option<usize> {
        self.lags().iter().position(|&l| l == lag)
    }

    /// Looks up a lag by its `theta{i}{j}` name.
    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.lags()
            .iter()
            .position(|l| alloc::format!("{l}") == name)
    }
}

/// A constraint broken by a candidate parameter set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Violation {
    ThetaLength { expected: usize, got: usize },
    NonFinite { lag: Lag },
    NegativeCoefficient { lag: Lag, value: f64 },
    SumNotBelowOne { sum: f64 },
    DegenerateDependence,
    Innovation(String),
    InnovationAlphaMismatch { innovation_alpha: f64, alpha: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ThetaLength { expected, got } => {
                write!(f, "expected {expected} theta coefficients, got {got}")
            }
            Self::NonFinite { lag } => write!(f, "{lag} is not finite"),
            Self::NegativeCoefficient { lag, value } => {
                write!(f, "negative coefficient {lag} = {value}")
            }
            Self::SumNotBelowOne { sum } => write!(f, "sum >= 1 (alpha = {sum})"),
            Self::DegenerateDependence => write!(f, "degenerate dependence (alpha = 0)"),
            Self::Innovation(msg) => write!(f, "innovation: {msg}"),
            Self::InnovationAlphaMismatch {
                innovation_alpha,
                alpha,
            } => write!(
                f,
                "NB innovation built for alpha = {innovation_alpha}, but theta sums to {alpha}"
            ),
        }
    }
}

/// Full parameter set of a CINAR(p1, p2) model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CinarParams {
    pub order: ModelOrder,
    pub theta: Vec<f64>,
    pub innovation: InnovationDist,
}

impl CinarParams {
    /// Builds and validates.
    pub fn new(order: ModelOrder, theta: Vec<f64>, innovation: InnovationDist) -> Result<Self> {
        let p = Self {
            order,
            theta,
            innovation,
        };
        p.validate().map_err(Error::InvalidParams)?;
        Ok(p)
    }

    /// Poisson innovations with mean `mu_eps`.
    pub fn poisson(order: ModelOrder, theta: Vec<f64>, mu_eps: f64) -> Result<Self> {
        Self::new(order, theta, InnovationDist::Poisson { mu: mu_eps })
    }

    /// Innovations inducing a negative-binomial marginal, specified through the
    /// innovation mean `mu_eps` and dispersion ratio `i_eps`.
    pub fn nb_marginal(order: ModelOrder, theta: Vec<f64>, mu_eps: f64, i_eps: f64) -> Result<Self> {
        let alpha: f64 = theta.iter().sum();
        if !(alpha > 0.0 && alpha < 1.0) {
            let p = Self {
                order,
                theta,
                innovation: InnovationDist::Poisson { mu: mu_eps },
            };
            return Err(Error::InvalidParams(p.validate().err().unwrap_or_default()));
        }
        let innovation = InnovationDist::nb_from_targets(mu_eps, i_eps, alpha)?;
        Self::new(order, theta, innovation)
    }

    /// Checks every parameter constraint; `Err` lists all violations found.
    pub fn validate(&self) -> core::result::Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        let lags = self.order.lags();
        if self.theta.len() != lags.len() {
            v.push(Violation::ThetaLength {
                expected: lags.len(),
                got: self.theta.len(),
            });
        } else {
            for (lag, &th) in lags.iter().zip(&self.theta) {
                if !th.is_finite() {
                    v.push(Violation::NonFinite { lag: *lag });
                } else if th < 0.0 {
                    v.push(Violation::NegativeCoefficient { lag: *lag, value: th });
                }
            }
        }
        let alpha: f64 = self.theta.iter().sum();
        if alpha >= 1.0 {
            v.push(Violation::SumNotBelowOne { sum: alpha });
        } else if alpha == 0.0 {
            v.push(Violation::DegenerateDependence);
        }
        if let Err(msg) = self.innovation.check() {
            v.push(Violation::Innovation(msg));
        } else if let InnovationDist::NbMarginal { alpha: a, .. } = self.innovation {
            if (a - alpha).abs() > 1e-12 {
                v.push(Violation::InnovationAlphaMismatch {
                    innovation_alpha: a,
                    alpha,
                });
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn alpha(&self) -> f64 {
        self.theta.iter().sum()
    }

    pub fn phi(&self) -> Vec<f64> {
        let a = self.alpha();
        self.theta.iter().map(|t| t / a).collect()
    }

    pub fn lags(&self) -> Vec<Lag> {
        self.order.lags()
    }
}

/// Splits `theta` into `(alpha, phi)`.
pub fn theta_to_alpha_phi(theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let alpha: f64 = theta.iter().sum();
    if alpha == 0.0 {
        return Err(Error::DegenerateDependence);
    }
    Ok((alpha, theta.iter().map(|t| t / alpha).collect()))
}

pub fn alpha_phi_to_theta(alpha: f64, phi: &[f64]) -> Vec<f64> {
    phi.iter().map(|p| alpha * p).collect()
}

/// Stationary marginal mean and variance `(mu_X, sigma2_X)`.
pub fn stationary_moments(params: &CinarParams) -> Result<(f64, f64)> {
    params.validate().map_err(Error::InvalidParams)?;
    let (mu_e, var_e) = params.innovation.moments();
    Ok(stationary_moments_from(params.alpha(), mu_e, var_e))
}

pub(crate) fn stationary_moments_from(alpha: f64, mu_eps: f64, var_eps: f64) -> (f64, f64) {
    (
        mu_eps / (1.0 - alpha),
        (alpha * mu_eps + var_eps) / (1.0 - alpha * alpha),
    )
}

/// Sign of an autoregressive term in the Tobit variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const fn value(self) -> i64 {
        match self {
            Self::Plus => 1,
            Self::Minus => -1,
        }
    }
}

/// One sign per lag, in lexicographic lag order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignPattern {
    signs: Vec<Sign>,
}

impl SignPattern {
    pub fn new(order: ModelOrder, signs: Vec<Sign>) -> Result<Self> {
        if signs.len() != order.n_lags() {
            return Err(Error::InvalidSigns(alloc::format!(
                "expected {} signs, got {}",
                order.n_lags(),
                signs.len()
            )));
        }
        Ok(Self { signs })
    }

    pub fn all_plus(order: ModelOrder) -> Self {
        Self {
            signs: alloc::vec![Sign::Plus; order.n_lags()],
        }
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

/// An `n1 x n2` grid of counts, row-major, `get(s, t)` with zero-based `s` (row)
/// and `t` (column).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountGrid {
    n1: usize,
    n2: usize,
    values: Vec<u32>,
}

impl CountGrid {
    pub fn new(n1: usize, n2: usize, values: Vec<u32>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::GridTooSmall {
                n1,
                n2,
                what: "a non-empty grid",
            });
        }
        if values.len() != n1 * n2 {
            return Err(Error::Invalid(alloc::format!(
                "grid {n1}x{n2} needs {} values, got {}",
                n1 * n2,
                values.len()
            )));
        }
        Ok(Self { n1, n2, values })
    }

    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            values: alloc::vec![0; n1 * n2],
        }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let n1 = rows.len();
        let n2 = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n2) {
            return Err(Error::Invalid("ragged rows".into()));
        }
        Self::new(n1, n2, rows.concat())
    }

    pub const fn n1(&self) -> usize {
        self.n1
    }

    pub const fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> u32 {
        self.values[s * self.n2 + t]
    }

    #[inline]
    pub fn set(&mut self, s: usize, t: usize, v: u32) {
        self.values[s * self.n2 + t] = v;
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.values.chunks(self.n2)
    }

    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        crate::numeric::sum_f64(self.values.iter().map(|&v| v as f64)) / self.values.len() as f64
    }

    /// Sub-grid `rows x cols` starting at `(s0, t0)`.
    pub fn window(&self, s0: usize, t0: usize, rows: usize, cols: usize) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for s in s0..s0 + rows {
            values.extend_from_slice(&self.values[s * self.n2 + t0..s * self.n2 + t0 + cols]);
        }
        Self {
            n1: rows,
            n2: cols,
            values,
        }
    }

    /// Lagged values `X_{s-i, t-j}` over `lags` at site `(s, t)`.
    pub fn past(&self, s: usize, t: usize, lags: &[Lag]) -> Vec<u32> {
        lags.iter()
            .map(|l| self.get((s as isize - l.i) as usize, (t as isize - l.j) as usize))
            .collect()
    }
}
