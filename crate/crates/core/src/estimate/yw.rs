use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{check_fixed, free_lags, is_admissible, well_conditioned, FitDiagnostics, FitResult, Method};
use crate::acf::{field_acvf, sample_acf};
use crate::error::{Error, Result};
use crate::model::{CountGrid, ModelOrder};

/// Yule-Walker estimates from the sample ACF.
///
/// Solves `P theta = rho` with `rho_k = rho_hat(k, l)` and
/// `P[(k,l),(i,j)] = rho_hat(k-i, l-j)` over the lag set, then
/// `mu_eps = mean (1 - alpha)` and
/// `sigma2_eps = var (1 - alpha^2) - alpha mu_eps`.
pub fn yw_estimate(grid: &CountGrid, order: ModelOrder) -> Result<FitResult> {
    yw_estimate_with(grid, order, &[])
}

/// As [`yw_estimate`] with the lags in `fixed` pinned to zero (their rows and
/// columns are dropped from the system).
pub fn yw_estimate_with(grid: &CountGrid, order: ModelOrder, fixed: &[usize]) -> Result<FitResult> {
    let fixed = check_fixed(order, fixed)?;
    let (p1, p2) = (order.p1(), order.p2());
    if grid.n1() <= p1 || grid.n2() <= p2 {
        return Err(Error::GridTooSmall {
            n1: grid.n1(),
            n2: grid.n2(),
            what: "Yule-Walker estimation",
        });
    }
    let acf = sample_acf(grid, p1, p2)?;
    let lags = order.lags();
    let free = free_lags(order, &fixed);
    let m = free.len();
    let rho = DVector::from_iterator(m, free.iter().map(|&a| acf.get(lags[a].i, lags[a].j)));
    let p = DMatrix::from_fn(m, m, |r, c| {
        let (a, b) = (lags[free[r]], lags[free[c]]);
        acf.get(a.i - b.i, a.j - b.j)
    });
    if !well_conditioned(&p) {
        return Err(Error::YwSingular);
    }
    let sol = p.lu().solve(&rho).ok_or(Error::YwSingular)?;
    let mut theta = alloc::vec![0.0; order.n_lags()];
    for (k, &a) in free.iter().enumerate() {
        theta[a] = sol[k];
    }
    let alpha: f64 = theta.iter().sum();
    let mean = grid.mean();
    let values: Vec<f64> = grid.values().iter().map(|&v| f64::from(v)).collect();
    let var_x = field_acvf(&values, grid.n1(), grid.n2(), mean, 0, 0);
    let mu_eps = mean * (1.0 - alpha);
    let sigma2_eps = var_x * (1.0 - alpha * alpha) - alpha * mu_eps;
    Ok(FitResult {
        method: Method::Yw,
        family: None,
        order,
        admissible: is_admissible(&theta, order, mu_eps, Some(sigma2_eps)),
        theta,
        fixed,
        mu_eps,
        i_eps: Some(sigma2_eps / mu_eps),
        sigma2_eps: Some(sigma2_eps),
        std_errors: None,
        loglik: None,
        aic: None,
        bic: None,
        diagnostics: FitDiagnostics {
            converged: true,
            ..Default::default()
        },
    })
}
