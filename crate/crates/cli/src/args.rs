use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "radshoot",
    version,
    about = "Shooting solver for u'' = g(x, u) + p(x) with radiation boundary conditions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find, classify and verify all solutions.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Sample T, T' and T'' over the shooting domain.
    #[command(allow_negative_numbers = true)]
    Curve(CurveArgs),
    /// First eigenvalue of -u'' under the radiation conditions.
    #[command(allow_negative_numbers = true)]
    Eigen(EigenArgs),
    /// Solve a family across values of a1 or of the forcing amplitude.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Re-integrate and re-check a stored solutions file.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Grid evidence for the standing hypotheses, λ₁ and the Φ inequality.
    #[command(allow_negative_numbers = true)]
    Probe(ProbeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Curve(_) => "curve",
            Command::Eigen(_) => "eigen",
            Command::Sweep(_) => "sweep",
            Command::Verify(_) => "verify",
            Command::Probe(_) => "probe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Painleve,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    A1,
    PAmplitude,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Problem definition file (JSON).
    #[arg(long, conflicts_with = "family")]
    pub problem: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long = "A")]
    pub a: Option<f64>,
    /// g(x, u) for the custom family.
    #[arg(long)]
    pub g: Option<String>,
    /// p(x) for the custom family.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long = "g-u")]
    pub g_u: Option<String>,
    #[arg(long = "g-uu")]
    pub g_uu: Option<String>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write data here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NumericArgs {
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub escape_bound: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Largest |λ| probed when bracketing the domain.
    #[arg(long)]
    pub search_cap: Option<f64>,
    /// Root-function scan points per domain component.
    #[arg(long)]
    pub scan_points: Option<usize>,
    #[arg(long)]
    pub verify_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write the certificate (JSON) to this file.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Samples per domain component (at least 16).
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EigenArgs {
    #[arg(long)]
    pub a0: f64,
    #[arg(long)]
    pub a1: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma separated, strictly increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Solutions file previously written by `solve --format json`.
    #[arg(long)]
    pub solutions: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 10.0)]
    pub u_max: f64,
    #[arg(long, default_value_t = 65)]
    pub x_points: usize,
    #[arg(long, default_value_t = 2048)]
    pub u_points: usize,
}
