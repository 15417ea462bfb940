use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_fixed, free_lags, LoglikEvaluator};
use crate::error::{Error, Result};
use crate::innovations::InnovationDist;
use crate::model::{CinarParams, CountGrid};
use crate::numeric::sqrt;

/// Standard errors from the inverse of the negative central-difference Hessian
/// of `f` at `x`.
///
/// The step for coordinate `i` is `eps^(1/3) (1 + |x_i|)`, capped at
/// `max_step[i]`. Fails with [`Error::NotAtMaximum`] unless the negative
/// Hessian is positive definite.
pub fn hessian_standard_errors(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    max_step: &[f64],
) -> Result<Vec<f64>> {
    let n = x.len();
    let h: Vec<f64> = (0..n)
        .map(|i| (libm::cbrt(f64::EPSILON) * (1.0 + x[i].abs())).min(max_step[i]))
        .collect();
    let f0 = f(x);
    let mut xp = x.to_vec();
    let mut eval = |moves: &[(usize, f64)]| {
        for &(i, d) in moves {
            xp[i] += d;
        }
        let v = f(&xp);
        xp.copy_from_slice(x);
        v
    };
    let mut hess = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let fp = eval(&[(i, h[i])]);
        let fm = eval(&[(i, -h[i])]);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = eval(&[(i, h[i]), (j, h[j])]);
            let fpm = eval(&[(i, h[i]), (j, -h[j])]);
            let fmp = eval(&[(i, -h[i]), (j, h[j])]);
            let fmm = eval(&[(i, -h[i]), (j, -h[j])]);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(
            "objective is not finite around the evaluation point".into(),
        ));
    }
    let neg = -hess;
    let eig = SymmetricEigen::new(neg.clone()).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(0.0_f64, |a, v| a.max(v.abs()));
    if !(min > 1e-12 * max) {
        return Err(Error::NotAtMaximum {
            min_eigenvalue: min,
            eigenvalues: eig.iter().copied().collect(),
        });
    }
    let inv = neg
        .cholesky()
        .ok_or(Error::NotAtMaximum {
            min_eigenvalue: min,
            eigenvalues: eig.iter().copied().collect(),
        })?
        .inverse();
    Ok((0..n).map(|i| sqrt(inv[(i, i)])).collect())
}

/// Observed-information standard errors of a CML estimate in the original
/// parametrization: free `theta`, `mu_eps`, and `I_eps` for NB innovations.
///
/// The returned vector follows [`super::FitResult::estimates`], with `None` at
/// the pinned lags.
pub fn observed_fisher_se(
    params: &CinarParams,
    grid: &CountGrid,
    fixed: &[usize],
) -> Result<Vec<Option<f64>>> {
    params.validate().map_err(Error::InvalidParams)?;
    let order = params.order;
    let fixed = check_fixed(order, fixed)?;
    let free = free_lags(order, &fixed);
    let (mu, var) = params.innovation.moments();
    let nb = match params.innovation {
        InnovationDist::Poisson { .. } => false,
        InnovationDist::NbMarginal { .. } => true,
        InnovationDist::Tabulated { .. } => {
            return Err(Error::Invalid(
                "standard errors need a Poisson or NB innovation family".into(),
            ))
        }
    };
    let eval = LoglikEvaluator::new(grid, order)?;
    let alpha = params.alpha();
    let mut x: Vec<f64> = free.iter().map(|&i| params.theta[i]).collect();
    let mut max_step: Vec<f64> = x.iter().map(|&t| 0.5 * t.min(0.5 * (1.0 - alpha))).collect();
    x.push(mu);
    max_step.push(0.5 * mu);
    if nb {
        let i_eps = var / mu;
        x.push(i_eps);
        max_step.push(0.5 * (i_eps - 1.0));
    }
    let m = free.len();
    let loglik = |v: &[f64]| -> f64 {
        let mut theta = alloc::vec![0.0; order.n_lags()];
        for (k, &i) in free.iter().enumerate() {
            theta[i] = v[k];
        }
        let p = if nb {
            CinarParams::nb_marginal(order, theta, v[m], v[m + 1])
        } else {
            CinarParams::poisson(order, theta, v[m])
        };
        match p.and_then(|p| eval.loglik(&p)) {
            Ok(l) => l,
            Err(_) => f64::NAN,
        }
    };
    let se = hessian_standard_errors(loglik, &x, &max_step)?;
    let mut out = alloc::vec![None; order.n_lags()];
    for (k, &i) in free.iter().enumerate() {
        out[i] = Some(se[k]);
    }
    out.extend(se[m..].iter().map(|&v| Some(v)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_quadratic() {
        // f = -(2 x^2 + x y + y^2); negative Hessian [[4,1],[1,2]], inverse
        // diagonal (2/7, 4/7).
        let f = |v: &[f64]| -(2.0 * v[0] * v[0] + v[0] * v[1] + v[1] * v[1]);
        let se = hessian_standard_errors(f, &[0.3, -0.2], &[1.0, 1.0]).unwrap();
        assert!((se[0] - (2.0f64 / 7.0).sqrt()).abs() < 1e-6);
        assert!((se[1] - (4.0f64 / 7.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn saddle_is_rejected() {
        let f = |v: &[f64]| v[0] * v[0] - v[1] * v[1];
        match hessian_standard_errors(f, &[0.0, 0.0], &[1.0, 1.0]) {
            Err(Error::NotAtMaximum { min_eigenvalue, eigenvalues }) => {
                assert!(min_eigenvalue < 0.0);
                assert_eq!(eigenvalues.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }
}
