//! Replicated simulate-and-fit experiments.
//!
//! Replication `r` simulates from seed `split_seed(seed, r)`, so the table
//! does not depend on the thread count or on scheduling.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cinar_core::rng::split_seed;
use cinar_core::{simulate_cinar, CountGrid, Family, FitResult, Method, ModelOrder, SimConfig};

use crate::commands::{fit_one, ModelSpec};
use crate::error::CliError;

/// One estimator in the study: a method, a fitted family and a fitted order.
///
/// Parsed from `yw`, `cls`, `cml`, `p-cml` or `n-cml`, optionally followed by
/// `@p1,p2` to fit an order other than the generating one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arm {
    pub label: String,
    pub method: Method,
    /// `None` follows the generating family.
    pub family: Option<Family>,
    pub order: Option<[usize; 2]>,
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (name, order) = match s.split_once('@') {
            Some((n, o)) => (n, Some(parse_pair(o)?)),
            None => (s, None),
        };
        let (method, family) = match name.to_ascii_lowercase().as_str() {
            "yw" => (Method::Yw, None),
            "cls" => (Method::Cls, None),
            "cml" => (Method::Cml, None),
            "p-cml" | "pcml" => (Method::Cml, Some(Family::Poisson)),
            "n-cml" | "ncml" => (Method::Cml, Some(Family::NbMarginal)),
            _ => return Err(format!("unknown arm {s:?}")),
        };
        Ok(Self {
            label: s.to_string(),
            method,
            family,
            order,
        })
    }
}

/// Parses `a,b`.
pub fn parse_pair(s: &str) -> Result<[usize; 2], String> {
    let v: Vec<&str> = s.split(',').map(str::trim).collect();
    match v.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|_| format!("bad integer {a:?}"))?,
            b.parse().map_err(|_| format!("bad integer {b:?}"))?,
        ]),
        _ => Err(format!("expected two comma-separated integers, got {s:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub dgp: ModelSpec,
    pub sizes: Vec<[usize; 2]>,
    pub reps: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub arms: Vec<Arm>,
    /// Worker count; `None` uses all cores.
    pub threads: Option<usize>,
}

/// Outcome of one arm on one replication.
#[derive(Debug, Clone, PartialEq)]
pub enum RepOutcome {
    Fit(FitResult),
    Failed(String),
}

/// Mean and standard deviation of each estimate over the successful
/// replications of one arm at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub arm: String,
    pub n: [usize; 2],
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub reps_ok: usize,
    pub reps_failed: usize,
    pub not_converged: usize,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub rows: Vec<SummaryRow>,
    /// `outcomes[size][arm][rep]`.
    pub outcomes: Vec<Vec<Vec<RepOutcome>>>,
}

pub fn replication_seed(seed: u64, rep: usize) -> u64 {
    split_seed(seed, rep as u64)
}

/// Grid of replication `rep` at size `n`.
pub fn replication_grid(cfg: &StudyConfig, n: [usize; 2], rep: usize) -> Result<CountGrid, CliError> {
    let sim = SimConfig::new(cfg.dgp.params()?, n[0], n[1], replication_seed(cfg.seed, rep))
        .with_burn_in(cfg.burn_in);
    Ok(simulate_cinar(&sim)?)
}

fn fit_arm(grid: &CountGrid, arm: &Arm, dgp: &ModelSpec) -> RepOutcome {
    let order = arm.order.unwrap_or(dgp.order);
    let run = || -> Result<FitResult, CliError> {
        let order = ModelOrder::new(order[0], order[1])?;
        fit_one(grid, order, arm.method, arm.family.unwrap_or(dgp.family), &[], false, false)
    };
    match run() {
        Ok(f) => RepOutcome::Fit(f),
        Err(e) => RepOutcome::Failed(e.to_string()),
    }
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult, CliError> {
    cfg.dgp.params()?;
    if cfg.reps == 0 || cfg.arms.is_empty() || cfg.sizes.is_empty() {
        return Err(CliError::Validation("study needs reps, arms and sizes".into()));
    }
    for a in &cfg.arms {
        if let Some(o) = a.order {
            ModelOrder::new(o[0], o[1])?;
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;

    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for &n in &cfg.sizes {
        // per_rep[rep][arm], collected in replication order.
        let per_rep: Vec<Vec<RepOutcome>> = pool.install(|| {
            (0..cfg.reps)
                .into_par_iter()
                .map(|r| match replication_grid(cfg, n, r) {
                    Ok(g) => cfg.arms.iter().map(|a| fit_arm(&g, a, &cfg.dgp)).collect(),
                    Err(e) => vec![RepOutcome::Failed(e.to_string()); cfg.arms.len()],
                })
                .collect()
        });
        let mut by_arm = Vec::new();
        for (k, arm) in cfg.arms.iter().enumerate() {
            let reps: Vec<RepOutcome> = per_rep.iter().map(|v| v[k].clone()).collect();
            for (r, o) in reps.iter().enumerate() {
                if let RepOutcome::Failed(msg) = o {
                    eprintln!("{} n={},{} rep {r}: {msg}", arm.label, n[0], n[1]);
                }
            }
            rows.push(summarize(arm, n, &reps));
            by_arm.push(reps);
        }
        outcomes.push(by_arm);
    }
    Ok(StudyResult { rows, outcomes })
}

fn summarize(arm: &Arm, n: [usize; 2], reps: &[RepOutcome]) -> SummaryRow {
    let fits: Vec<&FitResult> = reps
        .iter()
        .filter_map(|o| match o {
            RepOutcome::Fit(f) => Some(f),
            RepOutcome::Failed(_) => None,
        })
        .collect();
    let names = fits.first().map(|f| table_names(f)).unwrap_or_default();
    let values: Vec<Vec<f64>> = fits.iter().map(|f| table_values(f)).collect();
    let m = values.len() as f64;
    let mut mean = vec![f64::NAN; names.len()];
    let mut sd = vec![f64::NAN; names.len()];
    for c in 0..names.len() {
        if values.is_empty() {
            break;
        }
        let mu = values.iter().map(|v| v[c]).sum::<f64>() / m;
        mean[c] = mu;
        if values.len() > 1 {
            let ss = values.iter().map(|v| (v[c] - mu).powi(2)).sum::<f64>();
            sd[c] = (ss / (m - 1.0)).sqrt();
        }
    }
    SummaryRow {
        arm: arm.label.clone(),
        n,
        names,
        mean,
        sd,
        reps_ok: fits.len(),
        reps_failed: reps.len() - fits.len(),
        not_converged: fits.iter().filter(|f| !f.diagnostics.converged).count(),
    }
}

/// Column order of the published tables: `mu_eps`, `i_eps` when fitted, then
/// the coefficients.
fn table_names(f: &FitResult) -> Vec<String> {
    let mut names = vec!["mu_eps".to_string()];
    if f.family == Some(Family::NbMarginal) {
        names.push("i_eps".into());
    }
    names.extend(f.order.lags().iter().map(|l| l.to_string()));
    names
}

fn table_values(f: &FitResult) -> Vec<f64> {
    let mut v = vec![f.mu_eps];
    if f.family == Some(Family::NbMarginal) {
        v.push(f.i_eps.unwrap_or(f64::NAN));
    }
    v.extend_from_slice(&f.theta);
    v
}

/// Wide CSV: one `mean` and one `sd` line per arm and size, with a column for
/// every estimate name that appears in any row (blank where not fitted).
pub fn write_summary<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut columns: Vec<String> = Vec::new();
    for name in ["mu_eps", "i_eps"] {
        if rows.iter().any(|r| r.names.iter().any(|n| n == name)) {
            columns.push(name.into());
        }
    }
    let mut thetas: Vec<String> = rows
        .iter()
        .flat_map(|r| r.names.iter().filter(|n| n.starts_with("theta")).cloned())
        .collect();
    thetas.sort();
    thetas.dedup();
    columns.extend(thetas);

    let mut w = csv::Writer::from_writer(writer);
    let mut head: Vec<String> = ["arm", "n1", "n2", "stat", "reps_ok", "reps_failed", "not_converged"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    head.extend(columns.iter().cloned());
    w.write_record(&head).map_err(crate::io::GridError::from)?;
    for r in rows {
        for (stat, vals) in [("mean", &r.mean), ("sd", &r.sd)] {
            let mut rec = vec![
                r.arm.clone(),
                r.n[0].to_string(),
                r.n[1].to_string(),
                stat.to_string(),
                r.reps_ok.to_string(),
                r.reps_failed.to_string(),
                r.not_converged.to_string(),
            ];
            for c in &columns {
                rec.push(match r.names.iter().position(|n| n == c) {
                    Some(i) if vals[i].is_finite() => format!("{:.6}", vals[i]),
                    Some(_) => "NA".into(),
                    None => String::new(),
                });
            }
            w.write_record(&rec).map_err(crate::io::GridError::from)?;
        }
    }
    w.flush()?;
    Ok(())
}
