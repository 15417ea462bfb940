//! File formats, command implementations and the simulation-study harness
//! behind the `cinar` binary.

pub mod commands;
pub mod error;
pub mod io;
pub mod simstudy;

pub use commands::{FitConfig, FitOutput, ModelSpec, SimulateConfig, SCHEMA_VERSION};
pub use error::{exit, CliError};
pub use io::{parse_grid, read_grid, write_acf_table, write_grid, GridError};
pub use simstudy::{run_study, write_summary, Arm, StudyConfig};
