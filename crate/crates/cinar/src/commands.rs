//! Command implementations, independent of argument parsing.

use serde::{Deserialize, Serialize};

use cinar_core::diagnose::{diagnostics_report, pearson_residuals, DiagnosticsReport};
use cinar_core::estimate::{cls_estimate_with, yw_estimate_with};
use cinar_core::{
    acf_closed_form_11, cml_estimate, sample_acf, simulate_cinar, simulate_tobit_cinar,
    stationary_moments, theoretical_acf, AcfTable, CinarParams, CmlOptions, CountGrid, Family,
    FitResult, Method, ModelOrder, Sign, SignPattern, SimConfig,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A fully specified model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub order: [usize; 2],
    pub theta: Vec<f64>,
    pub family: Family,
    pub mu_eps: f64,
    pub i_eps: Option<f64>,
}

impl ModelSpec {
    pub fn order(&self) -> Result<ModelOrder, CliError> {
        Ok(ModelOrder::new(self.order[0], self.order[1])?)
    }

    pub fn params(&self) -> Result<CinarParams, CliError> {
        let order = self.order()?;
        Ok(match self.family {
            Family::Poisson => {
                if self.i_eps.is_some_and(|i| i != 1.0) {
                    return Err(CliError::Validation(
                        "--i-eps applies to the nb family only".into(),
                    ));
                }
                CinarParams::poisson(order, self.theta.clone(), self.mu_eps)?
            }
            Family::NbMarginal => {
                let i = self
                    .i_eps
                    .ok_or_else(|| CliError::Validation("family nb needs --i-eps".into()))?;
                CinarParams::nb_marginal(order, self.theta.clone(), self.mu_eps, i)?
            }
        })
    }
}

pub fn parse_family(s: &str) -> Result<Family, String> {
    match s.to_ascii_lowercase().as_str() {
        "poisson" | "poi" => Ok(Family::Poisson),
        "nb" | "negbin" => Ok(Family::NbMarginal),
        _ => Err(format!("unknown family {s:?} (expected poisson or nb)")),
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    match s.to_ascii_lowercase().as_str() {
        "yw" => Ok(Method::Yw),
        "cls" => Ok(Method::Cls),
        "cml" => Ok(Method::Cml),
        _ => Err(format!("unknown method {s:?} (expected yw, cls or cml)")),
    }
}

/// Parses `+,+,-` into signs.
pub fn parse_signs(s: &str) -> Result<Vec<Sign>, CliError> {
    s.split(',')
        .map(|t| match t.trim() {
            "+" | "+1" | "1" => Ok(Sign::Plus),
            "-" | "-1" => Ok(Sign::Minus),
            other => Err(CliError::Validation(format!("bad sign {other:?}"))),
        })
        .collect()
}

/// Resolves `theta11=0,theta12=0` to lag indices.
pub fn parse_fixed(order: ModelOrder, items: &[String]) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for item in items.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item.split_once('=').unwrap_or((item, "0"));
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("bad value in --fix {item:?}")))?;
        if value != 0.0 {
            return Err(CliError::Validation(format!(
                "--fix only pins coefficients to 0, got {item:?}"
            )));
        }
        let idx = order.index_of_name(name.trim()).ok_or_else(|| {
            CliError::Validation(format!("unknown coefficient {name:?} for order {order:?}"))
        })?;
        out.push(idx);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub model: ModelSpec,
    pub n: [usize; 2],
    pub seed: u64,
    pub burn_in: usize,
    pub signs: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateMeta {
    pub schema_version: u32,
    pub command: String,
    pub config: SimulateConfig,
    /// Stationary marginal mean and variance (unsigned models only).
    pub marginal_mean: Option<f64>,
    pub marginal_variance: Option<f64>,
    pub sample_mean: f64,
}

pub fn simulate(cfg: &SimulateConfig) -> Result<(CountGrid, SimulateMeta), CliError> {
    let params = cfg.model.params()?;
    let sim = SimConfig::new(params.clone(), cfg.n[0], cfg.n[1], cfg.seed).with_burn_in(cfg.burn_in);
    let (grid, moments) = match &cfg.signs {
        Some(s) => {
            let signs = SignPattern::new(params.order, parse_signs(s)?)?;
            (simulate_tobit_cinar(&sim.with_signs(signs))?, None)
        }
        None => (simulate_cinar(&sim)?, Some(stationary_moments(&params)?)),
    };
    let meta = SimulateMeta {
        schema_version: SCHEMA_VERSION,
        command: "simulate".into(),
        config: cfg.clone(),
        marginal_mean: moments.map(|m| m.0),
        marginal_variance: moments.map(|m| m.1),
        sample_mean: grid.mean(),
    };
    Ok((grid, meta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub input: Option<String>,
    pub order: [usize; 2],
    pub methods: Vec<Method>,
    pub family: Family,
    /// Names pinned to zero, e.g. `theta11`.
    pub fix: Vec<String>,
    pub multistart: bool,
    pub standard_errors: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n1: usize,
    pub n2: usize,
    pub mean: f64,
}

impl GridSummary {
    pub fn of(grid: &CountGrid) -> Self {
        Self {
            n1: grid.n1(),
            n2: grid.n2(),
            mean: grid.mean(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub schema_version: u32,
    pub command: String,
    pub config: FitConfig,
    pub grid: GridSummary,
    pub fits: Vec<FitResult>,
}

impl FitOutput {
    /// Whether every optimizer run converged.
    pub fn converged(&self) -> bool {
        self.fits.iter().all(|f| f.diagnostics.converged)
    }
}

/// Fits one method; CML starts from the CLS fit when one is available.
pub fn fit_one(
    grid: &CountGrid,
    order: ModelOrder,
    method: Method,
    family: Family,
    fixed: &[usize],
    multistart: bool,
    standard_errors: bool,
) -> Result<FitResult, CliError> {
    Ok(match method {
        Method::Yw => yw_estimate_with(grid, order, fixed)?,
        Method::Cls => cls_estimate_with(grid, order, fixed)?,
        Method::Cml => cml_estimate(
            grid,
            order,
            family,
            &CmlOptions {
                fixed: fixed.to_vec(),
                multistart,
                standard_errors,
                ..Default::default()
            },
        )?,
    })
}

pub fn fit(grid: &CountGrid, cfg: &FitConfig) -> Result<FitOutput, CliError> {
    let order = ModelOrder::new(cfg.order[0], cfg.order[1])?;
    let fixed = parse_fixed(order, &cfg.fix)?;
    if cfg.methods.is_empty() {
        return Err(CliError::Validation("no estimation method given".into()));
    }
    let fits = cfg
        .methods
        .iter()
        .map(|&m| fit_one(grid, order, m, cfg.family, &fixed, cfg.multistart, cfg.standard_errors))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FitOutput {
        schema_version: SCHEMA_VERSION,
        command: "fit".into(),
        config: cfg.clone(),
        grid: GridSummary::of(grid),
        fits,
    })
}

pub fn acf_sample(grid: &CountGrid, window: [usize; 2]) -> Result<AcfTable, CliError> {
    Ok(sample_acf(grid, window[0], window[1])?)
}

/// Theoretical ACF of the model with coefficients `theta`; `closed_form`
/// selects the order-(1,1) closed form instead of the recursion solver.
pub fn acf_theoretical(
    order: [usize; 2],
    theta: &[f64],
    window: [usize; 2],
    closed_form: bool,
) -> Result<AcfTable, CliError> {
    let order = ModelOrder::new(order[0], order[1])?;
    let params = CinarParams::poisson(order, theta.to_vec(), 1.0)?;
    if closed_form {
        Ok(acf_closed_form_11(&params)?.table(window[0], window[1]))
    } else {
        Ok(theoretical_acf(&params, window[0], window[1])?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseConfig {
    pub input: Option<String>,
    pub bins: usize,
    pub window: usize,
    pub n_params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOutput {
    pub schema_version: u32,
    pub command: String,
    pub config: DiagnoseConfig,
    pub params: CinarParams,
    pub grid: GridSummary,
    pub report: DiagnosticsReport,
}

pub fn diagnose(
    grid: &CountGrid,
    params: &CinarParams,
    cfg: &DiagnoseConfig,
) -> Result<(DiagnoseOutput, Vec<f64>, usize), CliError> {
    let report = diagnostics_report(params, grid, cfg.n_params, cfg.bins, cfg.window)?;
    let res = pearson_residuals(params, grid, cfg.window)?;
    Ok((
        DiagnoseOutput {
            schema_version: SCHEMA_VERSION,
            command: "diagnose".into(),
            config: cfg.clone(),
            params: params.clone(),
            grid: GridSummary::of(grid),
            report,
        },
        res.values,
        res.cols,
    ))
}

/// Reads a fit from JSON: a `fit` command output (the CML fit if present,
/// otherwise the last one) or a bare fit result.
pub fn fit_from_json(text: &str) -> Result<FitResult, CliError> {
    if let Ok(out) = serde_json::from_str::<FitOutput>(text) {
        let chosen = out
            .fits
            .iter()
            .find(|f| f.method == Method::Cml)
            .or(out.fits.last())
            .cloned();
        return chosen.ok_or_else(|| CliError::Validation("fit file holds no fits".into()));
    }
    Ok(serde_json::from_str::<FitResult>(text)?)
}
