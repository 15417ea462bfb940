use alloc::vec::Vec;

use super::{
    check_fixed, cls_estimate_with, free_lags, is_admissible, observed_fisher_se, yw_estimate_with,
    Family, FitDiagnostics, FitResult, Method,
};
use crate::diagnose::information_criteria;
use crate::error::{Error, Result};
use crate::innovations::{nb_params_from_targets, InnovationDist};
use crate::model::{CinarParams, CountGrid, ModelOrder};
use crate::numeric::{exp, ln, logistic, logit, BinomialTable, CompensatedSum};
use crate::optim::{minimize_bfgs, BfgsOptions};

/// Conditional log-likelihood of a fixed grid, reusable across parameter values.
///
/// Each site contributes `log sum_ij phi_ij sum_m B(X_{s-i,t-j}, alpha; m) P(eps = x - m)`.
#[derive(Debug, Clone)]
pub struct LoglikEvaluator {
    order: ModelOrder,
    n2: usize,
    /// Observed value per site with a complete past.
    x: Vec<u32>,
    /// Lagged values, `n_lags` per site.
    past: Vec<u32>,
    max_x: usize,
    max_past: usize,
}

impl LoglikEvaluator {
    pub fn new(grid: &CountGrid, order: ModelOrder) -> Result<Self> {
        let (p1, p2) = (order.p1(), order.p2());
        if grid.n1() <= p1 || grid.n2() <= p2 {
            return Err(Error::GridTooSmall {
                n1: grid.n1(),
                n2: grid.n2(),
                what: "likelihood evaluation",
            });
        }
        let lags = order.lags();
        let n_sites = (grid.n1() - p1) * (grid.n2() - p2);
        let mut x = Vec::with_capacity(n_sites);
        let mut past = Vec::with_capacity(n_sites * lags.len());
        for s in p1..grid.n1() {
            for t in p2..grid.n2() {
                x.push(grid.get(s, t));
                past.extend(grid.past(s, t, &lags));
            }
        }
        Ok(Self {
            order,
            n2: grid.n2(),
            max_x: x.iter().copied().max().unwrap_or(0) as usize,
            max_past: past.iter().copied().max().unwrap_or(0) as usize,
            x,
            past,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.x.len()
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    /// `l(params)`; `Err(ZeroProbability)` names the first site with zero likelihood.
    pub fn loglik(&self, params: &CinarParams) -> Result<f64> {
        let innov = params.innovation.pmf_table(self.max_x);
        self.loglik_with(params.alpha(), &params.phi(), &innov)
    }

    fn loglik_with(&self, alpha: f64, phi: &[f64], innov: &[f64]) -> Result<f64> {
        let binom = BinomialTable::new(self.max_past, alpha);
        let nl = phi.len();
        let (p1, p2) = (self.order.p1(), self.order.p2());
        let width = self.n2 - p2;
        let mut acc = CompensatedSum::default();
        for (site, &x) in self.x.iter().enumerate() {
            let x = x as usize;
            let past = &self.past[site * nl..(site + 1) * nl];
            let mut prob = 0.0;
            for (&w, &xp) in phi.iter().zip(past) {
                if w == 0.0 {
                    continue;
                }
                let row = binom.row(xp as usize);
                let top = x.min(xp as usize);
                let mut inner = 0.0;
                for m in 0..=top {
                    inner += row[m] * innov[x - m];
                }
                prob += w * inner;
            }
            if !(prob > 0.0) {
                return Err(Error::ZeroProbability {
                    s: p1 + site / width,
                    t: p2 + site % width,
                });
            }
            acc.add(ln(prob));
        }
        Ok(acc.value())
    }
}

/// Conditional log-likelihood over the sites `s >= p1`, `t >= p2` (0-based).
pub fn cml_loglik(params: &CinarParams, grid: &CountGrid) -> Result<f64> {
    params.validate().map_err(Error::InvalidParams)?;
    LoglikEvaluator::new(grid, params.order)?.loglik(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmlOptions {
    /// Lag indices pinned to zero.
    pub fixed: Vec<usize>,
    /// Starting point; CLS, then YW, then a neutral point when absent.
    pub init: Option<FitResult>,
    /// Also start from four spread-out points and keep the best optimum.
    pub multistart: bool,
    pub bfgs: BfgsOptions,
    pub standard_errors: bool,
}

impl Default for CmlOptions {
    fn default() -> Self {
        Self {
            fixed: Vec::new(),
            init: None,
            multistart: false,
            bfgs: BfgsOptions::default(),
            standard_errors: true,
        }
    }
}

/// Unconstrained coordinates: `logit(alpha)`, softmax logits of the free lags
/// relative to the first one, `ln mu_eps`, and (NB) `ln(I_eps - 1)`.
struct Coords {
    n_lags: usize,
    free: Vec<usize>,
    nb: bool,
}

struct Point {
    theta: Vec<f64>,
    mu: f64,
    i_eps: Option<f64>,
}

impl Coords {
    fn dim(&self) -> usize {
        self.free.len() + 1 + usize::from(self.nb)
    }

    fn decode(&self, z: &[f64]) -> Point {
        let m = self.free.len();
        let alpha = logistic(z[0]);
        let mut w: Vec<f64> = core::iter::once(0.0).chain(z[1..m].iter().copied()).collect();
        let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in &mut w {
            *v = exp(*v - top);
            total += *v;
        }
        let mut theta = alloc::vec![0.0; self.n_lags];
        for (k, &ix) in self.free.iter().enumerate() {
            theta[ix] = alpha * w[k] / total;
        }
        Point {
            theta,
            mu: exp(z[m]),
            i_eps: self.nb.then(|| 1.0 + exp(z[m + 1])),
        }
    }

    fn encode(&self, p: &Point) -> Vec<f64> {
        let alpha: f64 = self.free.iter().map(|&i| p.theta[i]).sum();
        let base = p.theta[self.free[0]];
        let mut z = Vec::with_capacity(self.dim());
        z.push(logit(alpha));
        z.extend(self.free[1..].iter().map(|&i| ln(p.theta[i] / base)));
        z.push(ln(p.mu));
        if self.nb {
            z.push(ln(p.i_eps.unwrap_or(2.0) - 1.0));
        }
        z
    }
}

fn innovation_at(p: &Point, alpha: f64) -> Option<InnovationDist> {
    match p.i_eps {
        None => (p.mu > 0.0 && p.mu.is_finite()).then_some(InnovationDist::Poisson { mu: p.mu }),
        Some(i) => nb_params_from_targets(p.mu, i, alpha)
            .ok()
            .map(|(nu, pi)| InnovationDist::NbMarginal { nu, pi, alpha }),
    }
}

fn project(theta: &mut [f64], free: &[usize]) {
    for &i in free {
        if !(theta[i] >= 1e-4) {
            theta[i] = 1e-4;
        }
    }
    let sum: f64 = free.iter().map(|&i| theta[i]).sum();
    if sum >= 1.0 - 1e-3 {
        for &i in free {
            theta[i] *= (1.0 - 1e-3) / sum;
        }
    }
}

/// Conditional maximum likelihood over `theta >= 0`, `sum theta < 1`,
/// `mu_eps > 0` (and `I_eps > 1` for NB), via BFGS in unconstrained coordinates.
///
/// Non-convergence is reported through `diagnostics.converged`, with the best
/// point found.
pub fn cml_estimate(
    grid: &CountGrid,
    order: ModelOrder,
    family: Family,
    opts: &CmlOptions,
) -> Result<FitResult> {
    let fixed = check_fixed(order, &opts.fixed)?;
    let free = free_lags(order, &fixed);
    let eval = LoglikEvaluator::new(grid, order)?;
    let nb = family == Family::NbMarginal;
    let coords = Coords {
        n_lags: order.n_lags(),
        free: free.clone(),
        nb,
    };

    let mean = grid.mean().max(1e-3);
    let init = opts
        .init
        .clone()
        .or_else(|| cls_estimate_with(grid, order, &fixed).ok())
        .or_else(|| yw_estimate_with(grid, order, &fixed).ok());
    let (mut theta0, mu0, i_init) = match &init {
        Some(f) => (f.theta.clone(), f.mu_eps, f.i_eps),
        None => {
            let mut th = alloc::vec![0.0; order.n_lags()];
            for &i in &free {
                th[i] = 0.5 / free.len() as f64;
            }
            (th, mean * 0.5, None)
        }
    };
    for &i in &fixed {
        theta0[i] = 0.0;
    }
    project(&mut theta0, &free);
    let alpha0: f64 = theta0.iter().sum();
    let mu0 = if mu0.is_finite() && mu0 > 1e-4 {
        mu0
    } else {
        (mean * (1.0 - alpha0)).max(1e-4)
    };
    let i0 = nb.then(|| match i_init {
        Some(i) if i.is_finite() && i > 1.0 + 1e-3 => i,
        _ => {
            let values: Vec<f64> = grid.values().iter().map(|&v| f64::from(v)).collect();
            let var = crate::acf::field_acvf(&values, grid.n1(), grid.n2(), grid.mean(), 0, 0);
            (var / mean * (1.0 + alpha0) - alpha0).max(1.1)
        }
    });

    let mut starts = alloc::vec![coords.encode(&Point {
        theta: theta0.clone(),
        mu: mu0,
        i_eps: i0,
    })];
    if opts.multistart {
        for a in [0.2, 0.5, 0.8, 0.95] {
            let mut th = alloc::vec![0.0; order.n_lags()];
            for &i in &free {
                th[i] = a / free.len() as f64;
            }
            starts.push(coords.encode(&Point {
                theta: th,
                mu: (mean * (1.0 - a)).max(1e-3),
                i_eps: i0,
            }));
        }
    }

    let objective = |z: &[f64]| -> f64 {
        let p = coords.decode(z);
        let alpha: f64 = p.theta.iter().sum();
        if !(alpha > 0.0 && alpha < 1.0) {
            return f64::INFINITY;
        }
        let Some(innov) = innovation_at(&p, alpha) else {
            return f64::INFINITY;
        };
        let table = innov.pmf_table(eval.max_x);
        let phi: Vec<f64> = p.theta.iter().map(|t| t / alpha).collect();
        match eval.loglik_with(alpha, &phi, &table) {
            Ok(l) => -l,
            Err(_) => f64::INFINITY,
        }
    };

    let mut best: Option<crate::optim::Minimum> = None;
    for z0 in &starts {
        let m = minimize_bfgs(objective, z0, opts.bfgs);
        let better = match &best {
            None => true,
            Some(b) => m.f < b.f,
        };
        if better {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let p = coords.decode(&best.x);
    let alpha: f64 = p.theta.iter().sum();
    let innovation = innovation_at(&p, alpha).ok_or_else(|| {
        Error::Invalid(alloc::format!("optimizer left the parameter space (alpha = {alpha})"))
    })?;
    let params = CinarParams {
        order,
        theta: p.theta.clone(),
        innovation,
    };
    let loglik = eval.loglik(&params)?;

    let mut diagnostics = FitDiagnostics {
        iterations: best.iterations,
        converged: best.converged,
        gradient_norm: Some(best.grad_norm),
        starts: starts.len(),
        se_error: None,
    };
    let std_errors = if opts.standard_errors {
        match observed_fisher_se(&params, grid, &fixed) {
            Ok(se) => Some(se),
            Err(e) => {
                diagnostics.se_error = Some(alloc::format!("{e}"));
                None
            }
        }
    } else {
        None
    };

    let mut fit = FitResult {
        method: Method::Cml,
        family: Some(family),
        order,
        admissible: is_admissible(&p.theta, order, p.mu, None),
        theta: p.theta,
        fixed,
        mu_eps: p.mu,
        i_eps: p.i_eps,
        sigma2_eps: Some(params.innovation.moments().1),
        std_errors,
        loglik: Some(loglik),
        aic: None,
        bic: None,
        diagnostics,
    };
    let (aic, bic) = information_criteria(
        loglik,
        fit.n_params(),
        grid.n1(),
        grid.n2(),
        eval.n_sites(),
    );
    fit.aic = Some(aic);
    fit.bic = Some(bic);
    Ok(fit)
}
