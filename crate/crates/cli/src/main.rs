//! `excess-entropy`: figures and tables for GPD excesses, maximum entropy
//! solutions and their convergence.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 domain error,
//! 3 numerical non-convergence.

mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use excess_entropy::functionals::DEFAULT_REL_TOL;
use excess_entropy::Error;

use commands::Rendered;
use output::{write_output, Format, OutputSpec, MAX_PRECISION, MIN_PRECISION};

#[derive(Debug, Parser)]
#[command(name = "excess-entropy", version, about)]
struct Cli {
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Significant digits in rendered numbers (4-17).
    #[arg(long, global = true, default_value_t = 10,
          value_parser = clap::value_parser!(u8).range(MIN_PRECISION as i64..=MAX_PRECISION as i64))]
    precision: u8,
    /// Relative quadrature tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_REL_TOL)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// GPD densities for several shapes.
    PlotGpd {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,1,10,100",
            allow_negative_numbers = true
        )]
        gammas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 5.0)]
        x_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Solve for the maximum entropy solution with given moments.
    Maxent {
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
    },
    /// Excess functionals against their asymptotics, one row per threshold.
    Excess {
        /// Model spec, `name[:p1[,p2]]`.
        model: String,
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        u: Vec<f64>,
        #[arg(long)]
        q: Option<f64>,
        /// Rescale the excess by its tail-class normalization.
        #[arg(long)]
        normalized: bool,
    },
    /// Convergence diagnostics over a log-spaced threshold grid.
    Sweep {
        model: String,
        #[arg(long, allow_negative_numbers = true)]
        u_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        u_max: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "functionals,entropy_gap,bregman,sup_norm"
        )]
        metrics: Vec<String>,
        #[arg(long)]
        q: Option<f64>,
        /// Also write the log-log chart here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Threshold a GPD and check the excess is GPD(γ, σ + γu).
    Stability {
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 10.0)]
        z_max: f64,
    },
    /// Seeded Monte Carlo estimate of the normalized excess functionals.
    MonteCarlo {
        model: String,
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
}

#[derive(Debug, Serialize)]
struct ErrorRecord {
    kind: &'static str,
    code: u8,
    message: String,
}

impl ErrorRecord {
    fn new(kind: &'static str, code: u8, message: impl Into<String>) -> Self {
        Self {
            kind,
            code,
            message: message.into(),
        }
    }

    fn from_core(e: &Error) -> Self {
        let (kind, code) = match e {
            Error::InvalidParameter(_) => ("invalid_parameter", 1),
            Error::UnknownModel(_) | Error::Parse { .. } => ("parse", 1),
            Error::Domain(_) => ("domain", 2),
            Error::Divergent { .. } => ("divergent", 2),
            Error::InsufficientData { .. } => ("insufficient_data", 2),
            Error::NonConvergence { .. } | Error::NonFinite(_) => ("non_convergence", 3),
        };
        Self::new(kind, code, e.to_string())
    }

    fn emit(&self) -> ExitCode {
        let body = serde_json::json!({ "error": self });
        eprintln!("{body}");
        ExitCode::from(self.code)
    }
}

fn render(r: &Rendered, spec: &OutputSpec) -> Result<String, ErrorRecord> {
    let precision = spec.precision;
    match spec.format {
        Format::Csv => Ok(r.table.to_csv(precision)),
        Format::Json => Ok(r.table.to_json(precision)),
        Format::Svg => r.plot.as_ref().map(|p| p.render()).ok_or_else(|| {
            ErrorRecord::new(
                "usage",
                1,
                format!("{} has no chart; use --format csv or json", r.table.command),
            )
        }),
    }
}

fn run(cli: Cli) -> Result<(), ErrorRecord> {
    let spec = OutputSpec {
        format: cli.format,
        path: cli.out.clone(),
        precision: cli.precision as usize,
    };
    let core = |r: excess_entropy::Result<Rendered>| r.map_err(|e| ErrorRecord::from_core(&e));
    let mut extra_svg = None;
    let rendered = match &cli.command {
        Command::PlotGpd {
            gammas,
            sigma,
            x_max,
            points,
        } => core(commands::plot_gpd(gammas, *sigma, *x_max, *points))?,
        Command::Maxent { q, mu, theta } => core(commands::maxent(*q, *mu, *theta))?,
        Command::Excess {
            model,
            u,
            q,
            normalized,
        } => core(commands::excess(model, u, *q, *normalized, cli.tol))?,
        Command::Sweep {
            model,
            u_min,
            u_max,
            points,
            metrics,
            q,
            svg,
        } => {
            extra_svg = svg.clone();
            core(commands::sweep(
                model, *u_min, *u_max, *points, metrics, *q, cli.tol,
            ))?
        }
        Command::Stability {
            gamma,
            sigma,
            u,
            points,
            z_max,
        } => core(commands::stability(*gamma, *sigma, *u, *points, *z_max))?,
        Command::MonteCarlo { model, u, n } => {
            core(commands::monte_carlo(model, *u, *n, cli.seed))?
        }
    };
    let text = render(&rendered, &spec)?;
    let io_err = |e: std::io::Error| ErrorRecord::new("io", 1, e.to_string());
    if let (Some(path), Some(plot)) = (extra_svg, &rendered.plot) {
        write_output(Some(&path), &plot.render()).map_err(io_err)?;
    }
    write_output(spec.path.as_deref(), &text).map_err(io_err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return ErrorRecord::new("usage", 1, e.to_string().trim_end()).emit();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(rec) => rec.emit(),
    }
}
