//! Sample and theoretical spatial autocorrelation.
//!
//! `rho(k, l) = Corr(X_{s,t}, X_{s+k,t+l})`, point-symmetric in `(k, l)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{CinarParams, CountGrid, ModelOrder};
use crate::numeric::{sqrt, CompensatedSum};

/// Autocorrelations over the window `|k| <= k_max`, `|l| <= l_max`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AcfTable {
    k_max: usize,
    l_max: usize,
    values: Vec<f64>,
}

impl AcfTable {
    fn from_fn(k_max: usize, l_max: usize, mut f: impl FnMut(isize, isize) -> f64) -> Self {
        let (kk, ll) = (k_max as isize, l_max as isize);
        let mut values = alloc::vec![0.0; (2 * k_max + 1) * (2 * l_max + 1)];
        let mut table = Self {
            k_max,
            l_max,
            values: Vec::new(),
        };
        // Fill the canonical half (k > 0, or k == 0 and l >= 0) and mirror it.
        for k in 0..=kk {
            for l in -ll..=ll {
                if k == 0 && l < 0 {
                    continue;
                }
                let v = if k == 0 && l == 0 { 1.0 } else { f(k, l) };
                values[table.index(k, l)] = v;
                values[table.index(-k, -l)] = v;
            }
        }
        table.values = values;
        table
    }

    #[inline]
    fn index(&self, k: isize, l: isize) -> usize {
        (k + self.k_max as isize) as usize * (2 * self.l_max + 1) + (l + self.l_max as isize) as usize
    }

    pub fn window(&self) -> (usize, usize) {
        (self.k_max, self.l_max)
    }

    /// `rho(k, l)`; panics outside the window.
    pub fn get(&self, k: isize, l: isize) -> f64 {
        assert!(
            k.unsigned_abs() <= self.k_max && l.unsigned_abs() <= self.l_max,
            "lag ({k},{l}) outside window"
        );
        self.values[self.index(k, l)]
    }

    /// Rows in display layout: `l` descending, each row over `k` ascending.
    pub fn display_rows(&self) -> Vec<(isize, Vec<f64>)> {
        let (kk, ll) = (self.k_max as isize, self.l_max as isize);
        (-ll..=ll)
            .rev()
            .map(|l| (l, (-kk..=kk).map(|k| self.get(k, l)).collect()))
            .collect()
    }

    /// Largest `|rho(k,l) - rho_other(k,l)|` over the common window.
    pub fn max_abs_diff(&self, other: &AcfTable) -> f64 {
        let kk = self.k_max.min(other.k_max) as isize;
        let ll = self.l_max.min(other.l_max) as isize;
        let mut m = 0.0_f64;
        for k in -kk..=kk {
            for l in -ll..=ll {
                m = m.max((self.get(k, l) - other.get(k, l)).abs());
            }
        }
        m
    }
}

/// Sample autocovariance of a real-valued `n1 x n2` field (row-major).
///
/// Sums `(X_{s,t} - mean)(X_{s-k,t-l} - mean)` over every pair with both sites
/// inside the grid and divides by `n1 n2`. Negative lags use `gamma(k,l) =
/// gamma(-k,-l)`.
pub fn field_acvf(values: &[f64], n1: usize, n2: usize, mean: f64, k: isize, l: isize) -> f64 {
    let (k, l) = if k < 0 || (k == 0 && l < 0) { (-k, -l) } else { (k, l) };
    let (ku, n2i) = (k as usize, n2 as isize);
    let t_lo = l.max(0) as usize;
    let t_hi = (n2i + l.min(0)) as usize;
    let mut acc = CompensatedSum::default();
    for s in ku..n1 {
        let row = &values[s * n2..(s + 1) * n2];
        let lag_row = &values[(s - ku) * n2..(s - ku + 1) * n2];
        let mut row_sum = 0.0;
        for t in t_lo..t_hi {
            let tl = (t as isize - l) as usize;
            row_sum += (row[t] - mean) * (lag_row[tl] - mean);
        }
        acc.add(row_sum);
    }
    acc.value() / (n1 * n2) as f64
}

/// Sample ACF table of a real-valued field.
pub fn field_acf(values: &[f64], n1: usize, n2: usize, k_max: usize, l_max: usize) -> Result<AcfTable> {
    if k_max >= n1 || l_max >= n2 {
        return Err(Error::LagOutOfRange {
            k: k_max as isize,
            l: l_max as isize,
            n1,
            n2,
        });
    }
    let mean = crate::numeric::sum_f64(values.iter().copied()) / values.len() as f64;
    let g0 = field_acvf(values, n1, n2, mean, 0, 0);
    if !(g0 > 0.0) {
        return Err(Error::DegenerateGrid);
    }
    Ok(AcfTable::from_fn(k_max, l_max, |k, l| {
        field_acvf(values, n1, n2, mean, k, l) / g0
    }))
}

fn grid_as_f64(grid: &CountGrid) -> Vec<f64> {
    grid.values().iter().map(|&v| f64::from(v)).collect()
}

/// Sample autocovariance `gamma_hat(k, l)` with divisor `n1 n2`.
pub fn sample_acvf(grid: &CountGrid, k: isize, l: isize) -> Result<f64> {
    if k.unsigned_abs() >= grid.n1() || l.unsigned_abs() >= grid.n2() {
        return Err(Error::LagOutOfRange {
            k,
            l,
            n1: grid.n1(),
            n2: grid.n2(),
        });
    }
    let v = grid_as_f64(grid);
    Ok(field_acvf(&v, grid.n1(), grid.n2(), grid.mean(), k, l))
}

/// Sample ACF `gamma_hat(k,l) / gamma_hat(0,0)` over the window.
pub fn sample_acf(grid: &CountGrid, k_max: usize, l_max: usize) -> Result<AcfTable> {
    field_acf(&grid_as_f64(grid), grid.n1(), grid.n2(), k_max, l_max)
}

/// Largest residual `|rho(k,l) - sum theta_ij rho(k-i, l-j)|` over cells of the
/// window with `k >= 1 or l >= 1`, evaluating `rho` through `rho_at`.
pub fn recursion_residual(
    order: ModelOrder,
    theta: &[f64],
    k_max: usize,
    l_max: usize,
    rho_at: impl Fn(isize, isize) -> f64,
) -> f64 {
    let lags = order.lags();
    let (kk, ll) = (k_max as isize, l_max as isize);
    let mut worst = 0.0_f64;
    for k in -kk..=kk {
        for l in -ll..=ll {
            if !(k >= 1 || l >= 1) {
                continue;
            }
            let rhs: f64 = lags
                .iter()
                .zip(theta)
                .map(|(lag, th)| th * rho_at(k - lag.i, l - lag.j))
                .sum();
            worst = worst.max((rho_at(k, l) - rhs).abs());
        }
    }
    worst
}

const ACF_SWEEP_TOL: f64 = 1e-15;
const ACF_RESIDUAL_TOL: f64 = 1e-8;
const ACF_FAR_FIELD_TOL: f64 = 1e-13;
const ACF_MAX_PAD: usize = 400;
const ACF_MAX_SWEEPS: usize = 20_000;

/// Theoretical ACF from the Yule-Walker recursions
/// `rho(k,l) = sum theta_ij rho(k-i, l-j)` (k >= 1 or l >= 1), point symmetry
/// and `rho(0,0) = 1`.
///
/// Gauss-Seidel fixed-point sweeps on a padded window with zero far field; the
/// padding grows until the outer ring is below `1e-13` (or a cap is reached).
pub fn theoretical_acf(params: &CinarParams, k_max: usize, l_max: usize) -> Result<AcfTable> {
    params.validate().map_err(Error::InvalidParams)?;
    theoretical_acf_theta(params.order, &params.theta, k_max, l_max)
}

/// As [`theoretical_acf`], for bare coefficients (`sum theta < 1`).
pub fn theoretical_acf_theta(
    order: ModelOrder,
    theta: &[f64],
    k_max: usize,
    l_max: usize,
) -> Result<AcfTable> {
    let mut pad = 10usize.max(3 * (order.p1() + order.p2()));
    loop {
        let m = k_max.max(l_max) + pad;
        let solved = solve_padded(order, theta, m)?;
        let far = solved.outer_ring_max();
        if far <= ACF_FAR_FIELD_TOL || pad >= ACF_MAX_PAD {
            let table = AcfTable::from_fn(k_max, l_max, |k, l| solved.get(k, l));
            let residual = recursion_residual(order, theta, k_max, l_max, |k, l| {
                // Canonical-half symmetry, as in the returned table.
                if k < 0 || (k == 0 && l < 0) {
                    solved.get(-k, -l)
                } else {
                    solved.get(k, l)
                }
            });
            if residual > ACF_RESIDUAL_TOL {
                return Err(Error::AcfNotConverged {
                    residual,
                    iterations: solved.sweeps,
                });
            }
            return Ok(table);
        }
        pad = (pad * 2).min(ACF_MAX_PAD);
    }
}

struct PaddedAcf {
    m: isize,
    values: Vec<f64>,
    sweeps: usize,
}

impl PaddedAcf {
    #[inline]
    fn idx(&self, k: isize, l: isize) -> usize {
        let w = 2 * self.m + 1;
        ((k + self.m) * w + (l + self.m)) as usize
    }

    #[inline]
    fn get(&self, k: isize, l: isize) -> f64 {
        if k.abs() > self.m || l.abs() > self.m {
            0.0
        } else {
            self.values[self.idx(k, l)]
        }
    }

    fn outer_ring_max(&self) -> f64 {
        let m = self.m;
        let mut out = 0.0_f64;
        for a in -m..=m {
            for (k, l) in [(m, a), (-m, a), (a, m), (a, -m)] {
                out = out.max(self.get(k, l).abs());
            }
        }
        out
    }
}

fn solve_padded(order: ModelOrder, theta: &[f64], m: usize) -> Result<PaddedAcf> {
    let lags = order.lags();
    let m = m as isize;
    let w = (2 * m + 1) as usize;
    let mut acf = PaddedAcf {
        m,
        values: alloc::vec![0.0; w * w],
        sweeps: 0,
    };
    let origin = acf.idx(0, 0);
    acf.values[origin] = 1.0;
    let terms: Vec<(isize, isize, f64)> = lags
        .iter()
        .zip(theta)
        .filter(|(_, &t)| t != 0.0)
        .map(|(l, &t)| (l.i, l.j, t))
        .collect();
    loop {
        let mut delta = 0.0_f64;
        for k in -m..=m {
            for l in -m..=m {
                if !(k >= 1 || l >= 1) {
                    continue;
                }
                let mut v = 0.0;
                for &(i, j, t) in &terms {
                    v += t * acf.get(k - i, l - j);
                }
                let at = acf.idx(k, l);
                delta = delta.max((v - acf.values[at]).abs());
                acf.values[at] = v;
                if k <= 0 && l <= 0 {
                    continue;
                }
                // Mirror into the region where only the symmetric recursion holds.
                if -k <= 0 && -l <= 0 {
                    let mirror = acf.idx(-k, -l);
                    acf.values[mirror] = v;
                }
            }
        }
        acf.sweeps += 1;
        if delta <= ACF_SWEEP_TOL {
            return Ok(acf);
        }
        if acf.sweeps >= ACF_MAX_SWEEPS {
            return Err(Error::AcfNotConverged {
                residual: delta,
                iterations: acf.sweeps,
            });
        }
    }
}

/// Closed-form ACF of a CINAR(1,1) field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormAcf11 {
    pub lambda: f64,
    pub eta: f64,
    theta01: f64,
    theta10: f64,
    theta11: f64,
}

/// `rho(k,0) = lambda^k`, `rho(0,l) = eta^l`, `rho(-k,l) = lambda^k eta^l` for
/// `k, l >= 0`, and the first-quadrant recursion elsewhere.
///
/// With `d = phi10 + alpha phi01 phi11` and
/// `B = 1 + alpha^2 (phi10^2 - phi01^2 - phi11^2)`, `lambda` is the root in
/// `(0,1)` of `alpha d x^2 - B x + alpha d = 0`, and
/// `eta = alpha (phi01 + phi11 lambda) / (1 - alpha phi10 lambda)`.
pub fn acf_closed_form_11(params: &CinarParams) -> Result<ClosedFormAcf11> {
    params.validate().map_err(Error::InvalidParams)?;
    if (params.order.p1(), params.order.p2()) != (1, 1) {
        return Err(Error::ClosedFormInapplicable("order must be (1,1)"));
    }
    let alpha = params.alpha();
    let phi = params.phi();
    let (phi01, phi10, phi11) = (phi[0], phi[1], phi[2]);
    let d = phi10 + alpha * phi01 * phi11;
    if !(d > 1e-12) {
        return Err(Error::ClosedFormInapplicable("vanishing denominator"));
    }
    let b = 1.0 + alpha * alpha * (phi10 * phi10 - phi01 * phi01 - phi11 * phi11);
    let ad = alpha * d;
    let disc = b * b - 4.0 * ad * ad;
    if disc < 0.0 {
        return Err(Error::ClosedFormInapplicable("negative discriminant"));
    }
    let lambda = (b - sqrt(disc)) / (2.0 * ad);
    let eta = alpha * (phi01 + phi11 * lambda) / (1.0 - alpha * phi10 * lambda);
    if !(lambda > 0.0 && lambda < 1.0 && eta > 0.0 && eta < 1.0) {
        return Err(Error::ClosedFormInapplicable("roots outside (0,1)"));
    }
    Ok(ClosedFormAcf11 {
        lambda,
        eta,
        theta01: params.theta[0],
        theta10: params.theta[1],
        theta11: params.theta[2],
    })
}

impl ClosedFormAcf11 {
    /// ACF table over the window.
    pub fn table(&self, k_max: usize, l_max: usize) -> AcfTable {
        let q1 = self.first_quadrant(k_max, l_max);
        AcfTable::from_fn(k_max, l_max, |k, l| {
            if k >= 0 && l >= 0 {
                q1[k as usize * (l_max + 1) + l as usize]
            } else {
                // k > 0 > l (canonical half only)
                libm::pow(self.lambda, k as f64) * libm::pow(self.eta, (-l) as f64)
            }
        })
    }

    fn first_quadrant(&self, k_max: usize, l_max: usize) -> Vec<f64> {
        let w = l_max + 1;
        let mut q = alloc::vec![0.0; (k_max + 1) * w];
        for k in 0..=k_max {
            q[k * w] = libm::pow(self.lambda, k as f64);
        }
        for l in 0..=l_max {
            q[l] = libm::pow(self.eta, l as f64);
        }
        for k in 1..=k_max {
            for l in 1..=l_max {
                q[k * w + l] = self.theta01 * q[k * w + l - 1]
                    + self.theta10 * q[(k - 1) * w + l]
                    + self.theta11 * q[(k - 1) * w + l - 1];
            }
        }
        q
    }
}
