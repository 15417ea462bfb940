//! Yule-Walker, conditional least squares and conditional maximum likelihood.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::innovations::InnovationDist;
use crate::model::{CinarParams, ModelOrder};

mod cls;
mod cml;
mod fisher;
mod yw;

pub use cls::{cls_estimate, cls_estimate_with};
pub use cml::{cml_estimate, cml_loglik, CmlOptions, LoglikEvaluator};
pub use fisher::{hessian_standard_errors, observed_fisher_se};
pub use yw::{yw_estimate, yw_estimate_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Method {
    Yw,
    Cls,
    Cml,
}

/// Innovation family fitted by CML.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Family {
    #[cfg_attr(feature = "serde", serde(rename = "poisson"))]
    Poisson,
    #[cfg_attr(feature = "serde", serde(rename = "nb"))]
    NbMarginal,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Finite-difference gradient norm in the unconstrained coordinates.
    pub gradient_norm: Option<f64>,
    pub starts: usize,
    /// Why standard errors are missing, if they are.
    pub se_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub method: Method,
    /// CML only.
    pub family: Option<Family>,
    pub order: ModelOrder,
    /// Lexicographic; pinned coordinates are exactly 0.
    pub theta: Vec<f64>,
    /// Lag indices pinned to zero.
    pub fixed: Vec<usize>,
    pub mu_eps: f64,
    /// Innovation dispersion ratio, from YW moments or NB CML.
    pub i_eps: Option<f64>,
    pub sigma2_eps: Option<f64>,
    /// Same layout as [`FitResult::estimates`]; `None` at pinned coordinates.
    pub std_errors: Option<Vec<Option<f64>>>,
    pub loglik: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub admissible: bool,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    /// `theta` (lexicographic), then `mu_eps`, then `i_eps` when present.
    pub fn estimates(&self) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.push(self.mu_eps);
        if let Some(i) = self.i_eps {
            v.push(i);
        }
        v
    }

    pub fn estimate_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.order.lags().iter().map(|l| alloc::format!("{l}")).collect();
        v.push("mu_eps".into());
        if self.i_eps.is_some() {
            v.push("i_eps".into());
        }
        v
    }

    pub fn alpha(&self) -> f64 {
        self.theta.iter().sum()
    }

    /// Number of free parameters: unpinned `theta`, `mu_eps` and (NB) `i_eps`.
    pub fn n_params(&self) -> usize {
        let nb = usize::from(self.family == Some(Family::NbMarginal));
        self.theta.len() - self.fixed.len() + 1 + nb
    }

    /// Model implied by the estimates under `family`.
    pub fn params_for(&self, family: Family) -> Result<CinarParams> {
        match family {
            Family::Poisson => CinarParams::poisson(self.order, self.theta.clone(), self.mu_eps),
            Family::NbMarginal => {
                let i = self.i_eps.ok_or_else(|| {
                    Error::Invalid("fit carries no dispersion ratio for an NB model".into())
                })?;
                CinarParams::nb_marginal(self.order, self.theta.clone(), self.mu_eps, i)
            }
        }
    }

    /// Model implied by the estimates: the fitted family, Poisson for YW/CLS.
    pub fn params(&self) -> Result<CinarParams> {
        self.params_for(self.family.unwrap_or(Family::Poisson))
    }
}

pub(crate) fn check_fixed(order: ModelOrder, fixed: &[usize]) -> Result<Vec<usize>> {
    let mut f = fixed.to_vec();
    f.sort_unstable();
    f.dedup();
    if f.iter().any(|&i| i >= order.n_lags()) {
        return Err(Error::Invalid("pinned lag index out of range".into()));
    }
    if f.len() == order.n_lags() {
        return Err(Error::DegenerateDependence);
    }
    Ok(f)
}

pub(crate) fn free_lags(order: ModelOrder, fixed: &[usize]) -> Vec<usize> {
    (0..order.n_lags()).filter(|i| !fixed.contains(i)).collect()
}

pub(crate) fn is_admissible(theta: &[f64], order: ModelOrder, mu_eps: f64, sigma2_eps: Option<f64>) -> bool {
    let innov = InnovationDist::Poisson { mu: mu_eps };
    let p = CinarParams {
        order,
        theta: theta.to_vec(),
        innovation: innov,
    };
    p.validate().is_ok() && sigma2_eps.is_none_or(|v| v > 0.0)
}

/// Rejects symmetric matrices whose eigenvalue spread exceeds `1e12`.
pub(crate) fn well_conditioned(m: &nalgebra::DMatrix<f64>) -> bool {
    let eig = nalgebra::SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    max > 0.0 && min.is_finite() && min > 1e-12 * max
}
