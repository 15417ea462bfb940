use alloc::string::String;
use alloc::vec::Vec;

use crate::model::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {}", format_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("invalid innovation distribution: {0}")]
    InvalidInnovation(String),

    #[error("degenerate dependence: all theta coefficients are zero")]
    DegenerateDependence,

    #[error("NB requires overdispersion (I_eps = {0} must exceed 1)")]
    NotOverdispersed(f64),

    #[error("invalid sign pattern: {0}")]
    InvalidSigns(String),

    #[error("grid has shape {n1}x{n2}, too small for {what}")]
    GridTooSmall { n1: usize, n2: usize, what: &'static str },

    #[error("lag ({k},{l}) out of range for a {n1}x{n2} grid")]
    LagOutOfRange { k: isize, l: isize, n1: usize, n2: usize },

    #[error("degenerate grid: zero sample variance")]
    DegenerateGrid,

    #[error("closed form inapplicable; use theoretical_acf ({0})")]
    ClosedFormInapplicable(&'static str),

    #[error("ACF solver did not converge (max residual {residual:e} after {iterations} sweeps)")]
    AcfNotConverged { residual: f64, iterations: usize },

    #[error("YW system singular")]
    YwSingular,

    #[error("CLS normal equations singular")]
    ClsSingular,

    #[error("zero conditional probability at site ({s},{t})")]
    ZeroProbability { s: usize, t: usize },

    #[error("not at a maximum / flat direction (smallest eigenvalue of negative Hessian {min_eigenvalue:e})")]
    NotAtMaximum { min_eigenvalue: f64, eigenvalues: Vec<f64> },

    #[error("use simulate_tobit_cinar for signed models")]
    UseTobit,

    #[error("{0}")]
    Invalid(String),
}

fn format_violations(v: &[Violation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, item) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{item}");
    }
    out
}
