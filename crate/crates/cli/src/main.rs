//! `calogero` command-line tool.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 verification or
//! numerical failure, 4 violated mathematical precondition.

mod commands;
mod literal;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;

#[derive(Parser)]
#[command(
    name = "calogero",
    version,
    about = "Extensions of -d²/dr² + b/r² (b < -1/4): spectra, resolvents, semigroups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// The coupling, either directly as `b < -1/4` or through `ν = √(-b - 1/4)`.
#[derive(Args, Clone, Copy, Debug)]
#[group(required = true, multiple = false)]
pub struct Coupling {
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
}

/// Boundary parameters `A = (a₁, a₂)` as complex literals such as `1`, `0.5-2i`.
#[derive(Args, Clone, Copy, Debug)]
pub struct Boundary {
    #[arg(long, allow_hyphen_values = true, value_parser = literal::parse_complex)]
    pub a1: C64,
    #[arg(long, allow_hyphen_values = true, value_parser = literal::parse_complex)]
    pub a2: C64,
}

#[derive(Args, Clone, Copy, Debug)]
pub struct OptionalBoundary {
    #[arg(long, allow_hyphen_values = true, value_parser = literal::parse_complex, requires = "a2")]
    pub a1: Option<C64>,
    #[arg(long, allow_hyphen_values = true, value_parser = literal::parse_complex, requires = "a1")]
    pub a2: Option<C64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
    /// Geometric near the origin, uniform once the step reaches `--max-step`.
    Hybrid,
}

/// Grid for generated input data. `--points` is the total count for `log`
/// and `linear`, and the count per decade for `hybrid`.
#[derive(Args, Clone, Copy, Debug)]
pub struct GridSpec {
    #[arg(long, default_value_t = 1e-6)]
    pub r_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Hybrid)]
    pub spacing: Spacing,
    #[arg(long, default_value_t = 0.05)]
    pub max_step: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Classify,
    Spectrum,
    Solutions,
    Resolvent,
    Semigroup,
    Ndim,
}

#[derive(Subcommand)]
enum Command {
    /// Print |κ|, θ, the case label and θ_A as JSON.
    Classify {
        #[command(flatten)]
        coupling: Coupling,
        #[command(flatten)]
        boundary: Boundary,
    },
    /// Write the eigenvalue ladder as CSV and print a JSON summary.
    Spectrum {
        #[command(flatten)]
        coupling: Coupling,
        #[command(flatten)]
        boundary: Boundary,
        #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
        j_min: i64,
        #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
        j_max: i64,
        /// Cross-check every eigenvalue with the shooting oracle.
        #[arg(long)]
        verify: bool,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply R(z) = (L_A - z)^{-1} to a RadialFunction CSV.
    Resolve {
        #[command(flatten)]
        coupling: Coupling,
        #[command(flatten)]
        boundary: Boundary,
        #[arg(long, allow_hyphen_values = true, value_parser = literal::parse_complex)]
        z: C64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON report {z, omega, c, residual, norm_estimate}; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        probes: usize,
        /// Largest accepted relative ODE residual of the output.
        #[arg(long, default_value_t = 1e-5)]
        max_residual: f64,
    },
    /// Evolve a RadialFunction with the semigroup generated by -L_A.
    Evolve {
        #[command(flatten)]
        coupling: Coupling,
        #[command(flatten)]
        boundary: Boundary,
        #[arg(long, allow_hyphen_values = true, value_parser = literal::parse_complex)]
        t: C64,
        /// Initial data; a log-bump centred at r = 1 when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write ‖T(s)f‖/‖f‖ for s = 2^{-k}, k = 0..10, as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        grid: GridSpec,
    },
    /// Assemble the N-dimensional operator and apply its resolvent mode by mode.
    Ndim {
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long = "N")]
        dim: usize,
        #[arg(long)]
        band: usize,
        /// JSON object mapping degree to [a1, a2] complex literals.
        #[arg(long)]
        choices: Option<PathBuf>,
        /// Mode-file header of the input; one log-bump per degree when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "-1", allow_hyphen_values = true, value_parser = literal::parse_complex)]
        z: C64,
        #[arg(long, default_value = "ndim_out")]
        out_dir: PathBuf,
        #[command(flatten)]
        grid: GridSpec,
    },
    /// Run a property suite and print a JSON pass/fail report.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[command(flatten)]
        coupling: Coupling,
        #[command(flatten)]
        boundary: OptionalBoundary,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure categories with their exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verification(String),
    Precondition(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Precondition(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Verification(m) => write!(f, "verification failure: {m}"),
            CliError::Precondition(m) => write!(f, "precondition violated: {m}"),
        }
    }
}

impl From<calogero::Error> for CliError {
    fn from(e: calogero::Error) -> Self {
        use calogero::Error as E;
        if e.is_precondition() {
            CliError::Precondition(e.to_string())
        } else if matches!(e, E::Invalid(_) | E::Io(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Verification(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CALOGERO_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CALOGERO_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Classify { coupling, boundary } => commands::classify(coupling, boundary),
        Command::Spectrum {
            coupling,
            boundary,
            j_min,
            j_max,
            verify,
            out,
        } => commands::spectrum(coupling, boundary, j_min, j_max, verify, out),
        Command::Resolve {
            coupling,
            boundary,
            z,
            input,
            out,
            report,
            probes,
            max_residual,
        } => commands::resolve(coupling, boundary, z, &input, &out, report, probes, max_residual),
        Command::Evolve {
            coupling,
            boundary,
            t,
            input,
            out,
            trace,
            nodes,
            tolerance,
            grid,
        } => commands::evolve(
            coupling,
            boundary,
            commands::EvolveArgs {
                t,
                input,
                out,
                trace,
                nodes,
                tolerance,
                grid,
            },
        ),
        Command::Ndim {
            b,
            dim,
            band,
            choices,
            input,
            z,
            out_dir,
            grid,
        } => commands::ndim(commands::NdimArgs {
            b,
            dim,
            band,
            choices,
            input,
            z,
            out_dir,
            grid,
        }),
        Command::Verify {
            suite,
            coupling,
            boundary,
            out,
        } => verify::run(suite, coupling, boundary, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("calogero: {e}");
            ExitCode::from(e.code())
        }
    }
}
