//! `radshoot` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 numeric failure (or a failed
//! write), 3 verification failure. Data goes to the output stream, all
//! diagnostics to the error stream.

pub mod args;
pub mod emit;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use radshoot_core::integrator::IntegratorConfig;
use radshoot_core::problem::{probe_hypotheses, ProbeGrid, ProblemError, ProblemFile, ProblemSpec};
use radshoot_core::shooting::{sample_t_curve, ShootConfig, ShootingError};
use radshoot_core::solver::{
    certificate, find_solutions, sweep, verify_solution, SolutionRecord, SolveOptions, SolveWarning, SolverError,
    SweepAxis,
};
use radshoot_core::spectrum::{first_eigenvalue, h9_report, SpectrumError};

use crate::args::{Axis, Cli, Command, Family, Format, NumericArgs, OutputArgs, ProblemArgs};

/// Environment variable naming the default output directory. When set and
/// `--output` is absent, data is written to `<dir>/<subcommand>.<csv|json>`.
pub const OUTPUT_DIR_ENV: &str = "RADSHOOT_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Verification(String),
    #[error("cannot write output: {0}")]
    StreamWriteFailure(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) | CliError::StreamWriteFailure(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::NonPositiveParameter { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<ShootingError> for CliError {
    fn from(e: ShootingError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::VerificationFailed { .. } => CliError::Verification(e.to_string()),
            SolverError::Problem(p) => p.into(),
            SolverError::Spectrum(s) => s.into(),
            SolverError::InvalidSweep(_) => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

/// Process-level settings that do not come from the argument list.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    pub output_dir: Option<PathBuf>,
}

impl Environment {
    pub fn from_process() -> Self {
        Self {
            output_dir: std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from),
        }
    }
}

/// Runs the tool with the process environment.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &Environment::from_process(), out, err)
}

pub fn run_with<I, T>(argv: I, env: &Environment, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(&cli.command, env, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn read_problem_file(path: &Path) -> Result<ProblemFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProblemFile::from_json(&text)?)
}

fn require<T>(value: Option<T>, flag: &str, family: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --family {family}")))
}

fn problem_file(args: &ProblemArgs) -> Result<ProblemFile, CliError> {
    if let Some(path) = &args.problem {
        return read_problem_file(path);
    }
    match args.family {
        None => Err(CliError::Usage("one of --problem or --family is required".into())),
        Some(Family::Painleve) => Ok(ProblemFile::Painleve {
            k: require(args.k, "K", "painleve")?,
            a: require(args.a, "A", "painleve")?,
            a0: require(args.a0, "a0", "painleve")?,
            a1: require(args.a1, "a1", "painleve")?,
        }),
        Some(Family::Custom) => Ok(ProblemFile::Custom {
            g: require(args.g.clone(), "g", "custom")?,
            p: require(args.p.clone(), "p", "custom")?,
            a0: require(args.a0, "a0", "custom")?,
            a1: require(args.a1, "a1", "custom")?,
            g_u: args.g_u.clone(),
            g_uu: args.g_uu.clone(),
        }),
    }
}

fn problem(args: &ProblemArgs) -> Result<(ProblemFile, ProblemSpec), CliError> {
    let file = problem_file(args)?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}

fn solve_options(n: &NumericArgs) -> Result<SolveOptions, CliError> {
    let mut integrator = IntegratorConfig::default();
    if let Some(v) = n.rel_tol {
        integrator.rel_tol = v;
    }
    if let Some(v) = n.abs_tol {
        integrator.abs_tol = v;
    }
    if let Some(v) = n.escape_bound {
        integrator.escape_bound = v;
    }
    if let Some(v) = n.max_steps {
        integrator.max_steps = v;
    }
    integrator.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut shoot = ShootConfig {
        integrator,
        ..ShootConfig::default()
    };
    if let Some(v) = n.search_cap {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Usage(format!("--search-cap must be positive, got {v}")));
        }
        shoot.search_cap = v;
    }
    let mut opts = SolveOptions {
        shoot,
        ..SolveOptions::default()
    };
    if let Some(v) = n.scan_points {
        if v < 16 {
            return Err(CliError::Usage(format!("--scan-points must be at least 16, got {v}")));
        }
        opts.base_points = v;
    }
    if let Some(v) = n.verify_tol {
        opts.verify_tol = v;
    }
    Ok(opts)
}

/// Opens the data sink: `--output`, else the environment directory, else `out`.
fn with_sink(
    output: &OutputArgs,
    subcommand: &str,
    env: &Environment,
    out: &mut dyn Write,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    let path = output.output.clone().or_else(|| {
        env.output_dir
            .as_ref()
            .map(|d| d.join(format!("{subcommand}.{}", output.format.extension())))
    });
    match path {
        Some(path) => {
            let file =
                File::create(&path).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            write(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn report_warnings(warnings: &[SolveWarning], err: &mut dyn Write) {
    for w in warnings {
        match w {
            SolveWarning::DomainCapLimited { lower, upper, cap } => {
                let _ = writeln!(
                    err,
                    "warning: no escape detected below |lambda| = {cap} (lower: {lower}, upper: {upper}); roots beyond the cap are not excluded"
                );
            }
        }
    }
}

fn dispatch(command: &Command, env: &Environment, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let name = command.name();
    match command {
        Command::Solve(a) => {
            let (_, prob) = problem(&a.problem)?;
            let opts = solve_options(&a.numeric)?;
            let set = find_solutions(&prob, &opts)?;
            report_warnings(&set.warnings, err);
            if let Some(path) = &a.certificate {
                let eigen = first_eigenvalue(prob.a0(), prob.a1())?;
                let report = probe_hypotheses(&prob, ProbeGrid::default(), eigen.lambda1);
                let cert = certificate(&prob, &set, &eigen, &report, &opts);
                let file = File::create(path)
                    .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                emit::write_json(&mut w, &cert)?;
                w.flush()?;
                if !cert.all_consistent() {
                    let _ = writeln!(err, "warning: certificate has inconsistent entries");
                }
            }
            with_sink(&a.output, name, env, out, |w| {
                emit::emit_solutions(&set.records, a.output.format, w)
            })?;
            Ok(0)
        }
        Command::Curve(a) => {
            let (_, prob) = problem(&a.problem)?;
            let opts = solve_options(&a.numeric)?;
            if a.samples < 16 {
                return Err(CliError::Usage(format!(
                    "--samples must be at least 16, got {}",
                    a.samples
                )));
            }
            let curve = sample_t_curve(&prob, a.samples, &opts.shoot)?;
            with_sink(&a.output, name, env, out, |w| {
                emit::emit_curve(&curve, a.output.format, w)
            })?;
            Ok(0)
        }
        Command::Eigen(a) => {
            let eigen = first_eigenvalue(a.a0, a.a1)?;
            with_sink(&a.output, name, env, out, |w| {
                emit::emit_eigen(&eigen, a.output.format, w)
            })?;
            Ok(0)
        }
        Command::Sweep(a) => {
            let file = problem_file(&a.problem)?;
            file.to_spec()?;
            let opts = solve_options(&a.numeric)?;
            let axis = match a.axis {
                Axis::A1 => SweepAxis::A1,
                Axis::PAmplitude => SweepAxis::PAmplitude,
            };
            let table = sweep(&file, axis, &a.values, &opts)?;
            for row in &table.rows {
                if let Some(e) = &row.error {
                    let _ = writeln!(err, "warning: row {}: {e}", row.param);
                }
            }
            with_sink(&a.output, name, env, out, |w| {
                emit::emit_sweep(&table, a.output.format, w)
            })?;
            Ok(0)
        }
        Command::Verify(a) => {
            let (_, prob) = problem(&a.problem)?;
            let opts = solve_options(&a.numeric)?;
            let text = std::fs::read_to_string(&a.solutions)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.solutions.display())))?;
            let stored: Vec<SolutionRecord> =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid solutions file: {e}")))?;
            let mut fresh = Vec::new();
            let mut failures = 0;
            for record in &stored {
                match verify_solution(&prob, record, a.tol, &opts) {
                    Ok(r) => fresh.push(r),
                    Err(e) => {
                        failures += 1;
                        let _ = writeln!(err, "error: {e}");
                    }
                }
            }
            with_sink(&a.output, name, env, out, |w| {
                emit::emit_solutions(&fresh, a.output.format, w)
            })?;
            if failures > 0 {
                let _ = writeln!(err, "{failures} of {} record(s) failed verification", stored.len());
                return Ok(3);
            }
            Ok(0)
        }
        Command::Probe(a) => {
            if a.output.format != Format::Json {
                return Err(CliError::Usage("probe output is JSON only".into()));
            }
            if !(a.u_max.is_finite() && a.u_max > 0.0) {
                return Err(CliError::Usage(format!("--u-max must be positive, got {}", a.u_max)));
            }
            let (file, prob) = problem(&a.problem)?;
            let eigen = first_eigenvalue(prob.a0(), prob.a1())?;
            let grid = ProbeGrid::new(a.u_max, a.x_points, a.u_points);
            let report = probe_hypotheses(&prob, grid, eigen.lambda1);
            let h9 = h9_report(&prob, &IntegratorConfig::default())?;
            let block = serde_json::json!({
                "problem": file,
                "lambda1": eigen.lambda1,
                "report": report,
                "h9": h9,
            });
            with_sink(&a.output, name, env, out, |w| emit::write_json(w, &block))?;
            Ok(0)
        }
    }
}
