//! Seeded simulation of CINAR and Tobit-CINAR grids.
//!
//! The field is generated on an `(n1 + burn_in) x (n2 + burn_in)` grid in
//! row-major order. Sites whose lags would leave the grid (the first `p1` rows
//! and first `p2` columns) are filled with independent innovation draws; every
//! other site selects one lag with probabilities `phi`, thins that value by
//! `alpha` and adds an innovation. The last `n1` rows and `n2` columns are
//! returned.
//!
//! Each site `(s, t)` of the extended grid draws from its own stream
//! `rng::stream(seed, (s << 32) | t)`, in the order: selection uniform,
//! thinning, innovation.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::model::{CinarParams, CountGrid, SignPattern};
use crate::rng;

pub const DEFAULT_BURN_IN: usize = 100;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: CinarParams,
    pub n1: usize,
    pub n2: usize,
    /// Width of the discarded margin.
    pub burn_in: usize,
    pub seed: u64,
    /// Tobit only.
    pub signs: Option<SignPattern>,
}

impl SimConfig {
    pub fn new(params: CinarParams, n1: usize, n2: usize, seed: u64) -> Self {
        Self {
            params,
            n1,
            n2,
            burn_in: DEFAULT_BURN_IN,
            seed,
            signs: None,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_signs(mut self, signs: SignPattern) -> Self {
        self.signs = Some(signs);
        self
    }
}

/// `alpha ∘ x`: a `Bin(x, alpha)` draw, with `0 ∘ x = 0` and `1 ∘ x = x`.
pub fn binomial_thin<R: Rng + ?Sized>(x: u32, alpha: f64, rng: &mut R) -> u32 {
    if x == 0 || alpha <= 0.0 {
        return 0;
    }
    if alpha >= 1.0 {
        return x;
    }
    Binomial::new(u64::from(x), alpha)
        .expect("alpha in (0,1)")
        .sample(rng) as u32
}

/// Simulates a CINAR(p1, p2) grid.
pub fn simulate_cinar(config: &SimConfig) -> Result<CountGrid> {
    if config.signs.is_some() {
        return Err(Error::UseTobit);
    }
    Ok(run(config, None, false)?.0)
}

/// Simulates a CINAR grid and also returns, for every returned site, the index
/// (into the lag set) of the selected lag.
pub fn simulate_cinar_traced(config: &SimConfig) -> Result<(CountGrid, Vec<u16>)> {
    if config.signs.is_some() {
        return Err(Error::UseTobit);
    }
    run(config, None, true)
}

/// Simulates a Tobit CINAR grid, `X = max(0, Y)` with signed thinned terms.
pub fn simulate_tobit_cinar(config: &SimConfig) -> Result<CountGrid> {
    let signs = config
        .signs
        .as_ref()
        .ok_or_else(|| Error::InvalidSigns("Tobit simulation needs a sign pattern".into()))?;
    if signs.len() != config.params.order.n_lags() {
        return Err(Error::InvalidSigns(alloc::format!(
            "expected {} signs, got {}",
            config.params.order.n_lags(),
            signs.len()
        )));
    }
    Ok(run(config, Some(signs), false)?.0)
}

fn run(
    config: &SimConfig,
    signs: Option<&SignPattern>,
    trace: bool,
) -> Result<(CountGrid, Vec<u16>)> {
    let params = &config.params;
    params.validate().map_err(Error::InvalidParams)?;
    if config.n1 == 0 || config.n2 == 0 {
        return Err(Error::GridTooSmall {
            n1: config.n1,
            n2: config.n2,
            what: "simulation",
        });
    }
    let lags = params.lags();
    let alpha = params.alpha();
    let mut cum_phi: Vec<f64> = params
        .phi()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    if let Some(last) = cum_phi.last_mut() {
        *last = f64::INFINITY;
    }
    let sign_values: Vec<i64> = match signs {
        Some(sp) => sp.signs().iter().map(|s| s.value()).collect(),
        None => alloc::vec![1; lags.len()],
    };
    let (p1, p2) = (params.order.p1(), params.order.p2());
    let big1 = config.n1 + config.burn_in;
    let big2 = config.n2 + config.burn_in;
    let mut grid = CountGrid::zeros(big1, big2);
    let mut decisions = if trace {
        alloc::vec![0u16; big1 * big2]
    } else {
        Vec::new()
    };
    let mut innov = params.innovation.sampler();

    for s in 0..big1 {
        for t in 0..big2 {
            let mut site_rng = rng::stream(config.seed, ((s as u64) << 32) | t as u64);
            if s < p1 || t < p2 {
                let e = innov.sample(&mut site_rng);
                grid.set(s, t, e);
                continue;
            }
            let u: f64 = site_rng.random();
            let sel = cum_phi.partition_point(|&c| c <= u);
            let lag = lags[sel];
            let past = grid.get((s as isize - lag.i) as usize, (t as isize - lag.j) as usize);
            let thinned = binomial_thin(past, alpha, &mut site_rng);
            let e = innov.sample(&mut site_rng);
            let y = sign_values[sel] * i64::from(thinned) + i64::from(e);
            grid.set(s, t, y.max(0) as u32);
            if trace {
                decisions[s * big2 + t] = sel as u16;
            }
        }
    }

    let out = grid.window(config.burn_in, config.burn_in, config.n1, config.n2);
    let trace_out = if trace {
        let mut v = Vec::with_capacity(config.n1 * config.n2);
        for s in config.burn_in..big1 {
            v.extend_from_slice(&decisions[s * big2 + config.burn_in..(s + 1) * big2]);
        }
        v
    } else {
        Vec::new()
    };
    Ok((out, trace_out))
}
