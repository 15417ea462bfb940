use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cinar::commands::{self, parse_family, parse_method, DiagnoseConfig, FitConfig, ModelSpec, SimulateConfig};
use cinar::simstudy::{self, parse_pair, Arm, StudyConfig};
use cinar::{exit, io as gio, CliError};
use cinar_core::{Family, Method};

#[derive(Parser)]
#[command(name = "cinar", version, about = "Simulate, fit and diagnose CINAR count random fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a grid.
    Simulate(SimulateArgs),
    /// Estimate a model from a grid.
    Fit(FitArgs),
    /// Sample and/or theoretical autocorrelation tables.
    Acf(AcfArgs),
    /// Pearson residuals, PIT histogram and information criteria of a fit.
    Diagnose(DiagnoseArgs),
    /// Replicated simulate-and-fit study.
    Simstudy(SimstudyArgs),
}

fn pair(s: &str) -> Result<[usize; 2], String> {
    parse_pair(s)
}

#[derive(Args)]
struct ModelArgs {
    /// Model order p1,p2.
    #[arg(long, value_parser = pair, default_value = "1,1")]
    order: [usize; 2],
    /// Coefficients in lexicographic lag order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Vec<f64>,
    #[arg(long, value_parser = parse_family, default_value = "poisson")]
    family: Family,
    #[arg(long, default_value_t = 1.0)]
    mu_eps: f64,
    /// Innovation dispersion ratio (nb only).
    #[arg(long)]
    i_eps: Option<f64>,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, CliError> {
        if self.theta.is_empty() {
            return Err(CliError::Validation("--theta is required".into()));
        }
        Ok(ModelSpec {
            order: self.order,
            theta: self.theta.clone(),
            family: self.family,
            mu_eps: self.mu_eps,
            i_eps: self.i_eps,
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Grid size n1,n2.
    #[arg(long, value_parser = pair)]
    n: [usize; 2],
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    /// Coefficient signs for the censored signed variant, e.g. `+,+,-`.
    #[arg(long, allow_hyphen_values = true)]
    signs: Option<String>,
    /// Grid CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metadata JSON.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Skip one header line.
    #[arg(long)]
    header: bool,
    #[arg(long, value_parser = pair, default_value = "1,1")]
    order: [usize; 2],
    /// Comma-separated list of yw, cls, cml.
    #[arg(long, default_value = "cml")]
    method: String,
    #[arg(long, value_parser = parse_family, default_value = "poisson")]
    family: Family,
    /// Coefficients pinned to zero, e.g. `theta11=0,theta12=0`.
    #[arg(long)]
    fix: Vec<String>,
    /// Extra CML starting points.
    #[arg(long)]
    multistart: bool,
    /// Skip standard errors.
    #[arg(long)]
    no_se: bool,
    /// JSON output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AcfArgs {
    /// Grid for the sample table.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    /// Order and coefficients for the theoretical table.
    #[arg(long, value_parser = pair)]
    order: Option<[usize; 2]>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Vec<f64>,
    /// Largest lags K,L.
    #[arg(long, value_parser = pair, default_value = "2,2")]
    window: [usize; 2],
    /// Use the order-(1,1) closed form for the theoretical table.
    #[arg(long)]
    closed_form: bool,
    #[arg(long)]
    sample_out: Option<PathBuf>,
    #[arg(long)]
    theory_out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    header: bool,
    /// Output of `fit` or a single fit result; otherwise give the model flags.
    #[arg(long)]
    fit: Option<PathBuf>,
    #[arg(long, value_parser = pair)]
    order: Option<[usize; 2]>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Vec<f64>,
    #[arg(long, value_parser = parse_family, default_value = "poisson")]
    family: Family,
    #[arg(long, default_value_t = 1.0)]
    mu_eps: f64,
    #[arg(long)]
    i_eps: Option<f64>,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Largest residual ACF lag.
    #[arg(long, default_value_t = 2)]
    window: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    pit_csv: Option<PathBuf>,
    #[arg(long)]
    acf_csv: Option<PathBuf>,
    #[arg(long)]
    residuals_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimstudyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Grid size n1,n2; repeatable.
    #[arg(long, value_parser = pair, required = true)]
    n: Vec<[usize; 2]>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    #[arg(long)]
    threads: Option<usize>,
    /// Estimators: yw, cls, cml, p-cml, n-cml, each optionally `@p1,p2`.
    #[arg(long, value_delimiter = ';', default_value = "yw;cls;cml")]
    arms: Vec<Arm>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run_simulate(a: SimulateArgs) -> Result<i32, CliError> {
    let cfg = SimulateConfig {
        model: a.model.spec()?,
        n: a.n,
        seed: a.seed,
        burn_in: a.burn_in,
        signs: a.signs,
    };
    let (grid, meta) = commands::simulate(&cfg)?;
    let mut w = sink(a.out.as_deref())?;
    gio::write_grid(&mut w, &grid)?;
    w.flush()?;
    if let Some(p) = a.meta.as_deref() {
        write_json(Some(p), &meta)?;
    }
    Ok(exit::OK)
}

fn run_fit(a: FitArgs) -> Result<i32, CliError> {
    let methods = a
        .method
        .split(',')
        .map(|m| parse_method(m.trim()))
        .collect::<Result<Vec<Method>, _>>()
        .map_err(CliError::Validation)?;
    let grid = gio::read_grid(&a.input, a.header)?;
    let cfg = FitConfig {
        input: Some(a.input.display().to_string()),
        order: a.order,
        methods,
        family: a.family,
        fix: a.fix,
        multistart: a.multistart,
        standard_errors: !a.no_se,
    };
    let out = commands::fit(&grid, &cfg)?;
    write_json(a.out.as_deref(), &out)?;
    Ok(if out.converged() { exit::OK } else { exit::NOT_CONVERGED })
}

fn run_acf(a: AcfArgs) -> Result<i32, CliError> {
    if a.input.is_none() && a.order.is_none() {
        return Err(CliError::Validation("give --input and/or --order with --theta".into()));
    }
    let both_stdout = a.input.is_some() && a.order.is_some() && a.sample_out.is_none() && a.theory_out.is_none();
    if let Some(p) = &a.input {
        let grid = gio::read_grid(p, a.header)?;
        let t = commands::acf_sample(&grid, a.window)?;
        let mut w = sink(a.sample_out.as_deref())?;
        gio::write_acf_table(&mut w, &t)?;
        w.flush()?;
    }
    if let Some(order) = a.order {
        let t = commands::acf_theoretical(order, &a.theta, a.window, a.closed_form)?;
        let mut w = sink(a.theory_out.as_deref())?;
        if both_stdout {
            writeln!(w)?;
        }
        gio::write_acf_table(&mut w, &t)?;
        w.flush()?;
    }
    Ok(exit::OK)
}

fn run_diagnose(a: DiagnoseArgs) -> Result<i32, CliError> {
    let grid = gio::read_grid(&a.input, a.header)?;
    let (params, n_params) = match (&a.fit, a.order) {
        (Some(p), _) => {
            let fit = commands::fit_from_json(&std::fs::read_to_string(p)?)?;
            (fit.params()?, fit.n_params())
        }
        (None, Some(order)) => {
            let spec = ModelSpec {
                order,
                theta: a.theta.clone(),
                family: a.family,
                mu_eps: a.mu_eps,
                i_eps: a.i_eps,
            };
            let nb = usize::from(a.family == Family::NbMarginal);
            let free = a.theta.iter().filter(|&&t| t != 0.0).count();
            (spec.params()?, free + 1 + nb)
        }
        (None, None) => {
            return Err(CliError::Validation("give --fit or --order with --theta".into()));
        }
    };
    let cfg = DiagnoseConfig {
        input: Some(a.input.display().to_string()),
        bins: a.bins,
        window: a.window,
        n_params,
    };
    let (out, residuals, cols) = commands::diagnose(&grid, &params, &cfg)?;
    write_json(a.out.as_deref(), &out)?;
    if let Some(p) = a.pit_csv.as_deref() {
        gio::write_column(File::create(p)?, "height", &out.report.pit_bins)?;
    }
    if let Some(p) = a.acf_csv.as_deref() {
        gio::write_acf_table(File::create(p)?, &out.report.residual_acf)?;
    }
    if let Some(p) = a.residuals_csv.as_deref() {
        gio::write_field(File::create(p)?, cols, &residuals)?;
    }
    Ok(exit::OK)
}

fn run_simstudy(a: SimstudyArgs) -> Result<i32, CliError> {
    let cfg = StudyConfig {
        dgp: a.model.spec()?,
        sizes: a.n,
        reps: a.reps,
        seed: a.seed,
        burn_in: a.burn_in,
        arms: a.arms,
        threads: a.threads,
    };
    let res = simstudy::run_study(&cfg)?;
    simstudy::write_summary(sink(a.out.as_deref())?, &res.rows)?;
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::VALIDATION } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Fit(a) => run_fit(a),
        Command::Acf(a) => run_acf(a),
        Command::Diagnose(a) => run_diagnose(a),
        Command::Simstudy(a) => run_simstudy(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
