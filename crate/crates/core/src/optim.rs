//! Quasi-Newton minimization.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

/// Stopping rules for [`minimize_bfgs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Converged once `|grad| <= grad_tol * (1 + |f|)`.
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Central-difference gradient with step `sqrt(eps) (1 + |x_i|)`.
pub fn central_gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = crate::numeric::sqrt(f64::EPSILON) * (1.0 + x[i].abs());
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// BFGS with finite-difference gradients.
///
/// Non-finite objective values are treated as `+inf` by the line search.
pub fn minimize_bfgs(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: BfgsOptions) -> Minimum {
    minimize_bfgs_with_gradient(
        |x| {
            let v = f(x);
            (v, central_gradient(&f, x))
        },
        x0,
        opts,
    )
}

/// BFGS on the inverse Hessian with Armijo backtracking.
pub fn minimize_bfgs_with_gradient(
    mut fg: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    opts: BfgsOptions,
) -> Minimum {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) = fg(x.as_slice());
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut iterations = 0;

    let finish = |x: &DVector<f64>, fx: f64, g: &DVector<f64>, it: usize, ok: bool| Minimum {
        x: x.as_slice().to_vec(),
        f: fx,
        grad_norm: g.norm(),
        iterations: it,
        converged: ok,
    };

    if !fx.is_finite() {
        return finish(&x, fx, &g, 0, false);
    }

    while iterations < opts.max_iter {
        if g.norm() <= opts.grad_tol * (1.0 + fx.abs()) {
            return finish(&x, fx, &g, iterations, true);
        }
        iterations += 1;
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = g.dot(&d);
        }
        // Keep the first trial step modest on a fresh (unscaled) metric.
        let mut step = if fresh { (1.0 / d.norm()).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &d * step;
            let (fnew, gnew) = fg(xn.as_slice());
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew, DVector::from_vec(gnew)));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if fresh {
                return finish(&x, fx, &g, iterations, false);
            }
            h = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hy' + hy s') + (rho^2 yHy + rho) s s'
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
            fresh = false;
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
    let ok = g.norm() <= opts.grad_tol * (1.0 + fx.abs());
    finish(&x, fx, &g, iterations, ok)
}
