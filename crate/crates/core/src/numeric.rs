//! Small numeric helpers shared across modules.

use alloc::vec::Vec;

/// Neumaier-compensated sum; order-dependent only through the input order,
/// so repeated evaluation is bit-identical.
pub fn sum_f64<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln Gamma(x)` together with the sign of `Gamma(x)`.
#[inline]
pub fn ln_gamma_signed(x: f64) -> (f64, i32) {
    let (v, s) = libm::lgamma_r(x);
    (v, if s < 0 { -1 } else { 1 })
}

/// `ln k!` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += ln(k as f64);
        out.push(acc);
    }
    out
}

/// Binomial PMF rows `B[n][m] = P(Bin(n, p) = m)` for `n = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    offsets: Vec<usize>,
    probs: Vec<f64>,
}

impl BinomialTable {
    pub fn new(n_max: usize, p: f64) -> Self {
        let lf = ln_factorials(n_max);
        let mut offsets = Vec::with_capacity(n_max + 2);
        let mut probs = Vec::with_capacity((n_max + 1) * (n_max + 2) / 2);
        let (lp, lq) = (ln(p), ln(1.0 - p));
        for n in 0..=n_max {
            offsets.push(probs.len());
            for m in 0..=n {
                let v = if p <= 0.0 {
                    if m == 0 { 1.0 } else { 0.0 }
                } else if p >= 1.0 {
                    if m == n { 1.0 } else { 0.0 }
                } else {
                    exp(lf[n] - lf[m] - lf[n - m] + m as f64 * lp + (n - m) as f64 * lq)
                };
                probs.push(v);
            }
        }
        offsets.push(probs.len());
        Self { offsets, probs }
    }

    /// `P(Bin(n, p) = m)` for `m = 0..=n`.
    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        &self.probs[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn n_max(&self) -> usize {
        self.offsets.len() - 2
    }
}

/// Binomial PMF at `m`, zero outside `0..=n`.
pub fn binomial_pmf(n: u64, p: f64, m: i64) -> f64 {
    if m < 0 || m as u64 > n {
        return 0.0;
    }
    let m = m as u64;
    if p <= 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if m == n { 1.0 } else { 0.0 };
    }
    let (nf, mf) = (n as f64, m as f64);
    exp(ln_gamma(nf + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(nf - mf + 1.0)
        + mf * ln(p)
        + (nf - mf) * ln(1.0 - p))
}

#[inline]
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    ln(p / (1.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum_f64(v), 2.0);
    }

    #[test]
    fn binomial_rows_normalize() {
        let t = BinomialTable::new(40, 0.37);
        for n in 0..=40 {
            let s: f64 = t.row(n).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} sum={s}");
            assert!((t.row(n)[n.min(3)] - binomial_pmf(n as u64, 0.37, n.min(3) as i64)).abs() < 1e-14);
        }
        assert_eq!(binomial_pmf(5, 0.3, 6), 0.0);
        assert_eq!(binomial_pmf(5, 0.3, -1), 0.0);
    }

    #[test]
    fn signed_gamma() {
        let (_, s) = ln_gamma_signed(-0.5);
        assert_eq!(s, -1);
        let (_, s) = ln_gamma_signed(-1.5);
        assert_eq!(s, 1);
    }
}
