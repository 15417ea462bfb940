use nalgebra::{DMatrix, DVector};

use super::{check_fixed, free_lags, is_admissible, well_conditioned, FitDiagnostics, FitResult, Method};
use crate::error::{Error, Result};
use crate::model::{CountGrid, ModelOrder};

/// Conditional least squares: minimizes
/// `Q = sum (X_{s,t} - mu_eps - sum theta_ij X_{s-i,t-j})^2` over the sites
/// with a complete past, in closed form through the normal equations `A v = b`.
pub fn cls_estimate(grid: &CountGrid, order: ModelOrder) -> Result<FitResult> {
    cls_estimate_with(grid, order, &[])
}

/// As [`cls_estimate`] with the lags in `fixed` pinned to zero.
pub fn cls_estimate_with(grid: &CountGrid, order: ModelOrder, fixed: &[usize]) -> Result<FitResult> {
    let fixed = check_fixed(order, fixed)?;
    let (p1, p2) = (order.p1(), order.p2());
    if grid.n1() <= p1 || grid.n2() <= p2 {
        return Err(Error::GridTooSmall {
            n1: grid.n1(),
            n2: grid.n2(),
            what: "least-squares estimation",
        });
    }
    let lags = order.lags();
    let free = free_lags(order, &fixed);
    let m = free.len();
    // Regressors: free lagged values, then the constant.
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    let mut b = DVector::<f64>::zeros(m + 1);
    let mut z = alloc::vec![0.0; m + 1];
    for s in p1..grid.n1() {
        for t in p2..grid.n2() {
            for (k, &ix) in free.iter().enumerate() {
                let l = lags[ix];
                z[k] = f64::from(grid.get(s - l.i as usize, t - l.j as usize));
            }
            z[m] = 1.0;
            let x = f64::from(grid.get(s, t));
            for r in 0..=m {
                b[r] += z[r] * x;
                for c in 0..=r {
                    a[(r, c)] += z[r] * z[c];
                }
            }
        }
    }
    for r in 0..=m {
        for c in 0..r {
            a[(c, r)] = a[(r, c)];
        }
    }
    if !well_conditioned(&a) {
        return Err(Error::ClsSingular);
    }
    let sol = a.lu().solve(&b).ok_or(Error::ClsSingular)?;
    let mut theta = alloc::vec![0.0; order.n_lags()];
    for (k, &ix) in free.iter().enumerate() {
        theta[ix] = sol[k];
    }
    let mu_eps = sol[m];
    Ok(FitResult {
        method: Method::Cls,
        family: None,
        order,
        admissible: is_admissible(&theta, order, mu_eps, None),
        theta,
        fixed,
        mu_eps,
        i_eps: None,
        sigma2_eps: None,
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
