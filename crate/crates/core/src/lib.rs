//! Conditional integer-valued autoregressive models on two-dimensional lattices.
//!
//! Simulation, autocorrelation, estimation (Yule-Walker, conditional least
//! squares, conditional maximum likelihood) and predictive diagnostics for
//! CINAR(p1, p2) count fields.

#![no_std]

extern crate alloc;

pub mod acf;
pub mod diagnose;
pub mod error;
pub mod estimate;
pub mod innovations;
pub mod model;
pub mod numeric;
pub mod optim;
pub mod rng;
pub mod simulate;

pub use acf::{acf_closed_form_11, sample_acf, sample_acvf, theoretical_acf, AcfTable};
pub use diagnose::{
    conditional_moments, conditional_pmf, information_criteria, pearson_residuals, pit_histogram,
    tobit_conditional_pmf, ConditionalPmf, DiagnosticsReport,
};
pub use error::{Error, Result};
pub use estimate::{
    cls_estimate, cml_estimate, cml_loglik, observed_fisher_se, yw_estimate, CmlOptions, Family,
    FitResult, Method,
};
pub use innovations::InnovationDist;
pub use model::{
    stationary_moments, CinarParams, CountGrid, Lag, ModelOrder, Sign, SignPattern, Violation,
};
pub use simulate::{simulate_cinar, simulate_tobit_cinar, SimConfig};
