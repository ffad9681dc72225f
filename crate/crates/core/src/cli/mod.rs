//! Command-line driver: `solve`, `study`, `extrapolate`, `certify`, `compare`.
//!
//! Exit codes: 0 success, 1 comparison failed its threshold, 2 usage,
//! 3 numerical failure, 4 I/O.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::convergence::{
    self, ConvergenceError, RefinementStudy, StudyConfig, DEFAULT_DENOMINATOR, DEFAULT_TOLERANCE,
};
use crate::integrator::{CurvaturePolicy, GridError, GridSpec};
use crate::model::{make_params, ProblemParams};
use crate::nitm::{self, NitmError, SolveOptions};
use crate::oracle::{self, OracleError, ShootingConfig};

use report::{CompareDoc, SolveDoc, StudyDoc, TableauDoc};

/// Rows kept in a profile file unless `--full-profile` is given.
pub const PROFILE_MAX_ROWS: usize = 4000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn numerical(policy: CurvaturePolicy) -> impl Fn(&dyn std::fmt::Display) -> CliError {
    move |e| {
        let hint = match policy {
            CurvaturePolicy::Extinction => "",
            _ => " (try --curvature-policy extinction)",
        };
        CliError::Numerical(format!("{e}{hint}"))
    }
}

fn convergence_error(policy: CurvaturePolicy, e: ConvergenceError) -> CliError {
    match e {
        ConvergenceError::Grid { .. } | ConvergenceError::TooFewLevels { .. } => {
            CliError::Usage(e.to_string())
        }
        other => numerical(policy)(&other),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "blasius",
    version,
    about = "Power-law Blasius boundary layer by the non-iterative transformation method",
    args_override_self = true
)]
pub struct Cli {
    /// key = value file supplying defaults for any long flag
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve once and report lambda, f''(0) and the truncated boundaries
    Solve(SolveArgs),
    /// Mesh refinement: f''(0) on steps h0 * 2^-g
    Study(StudyArgs),
    /// Richardson extrapolation tableau of a refinement study
    Extrapolate(ExtrapolateArgs),
    /// Extrapolate and certify the number of stable decimals
    Certify(CertifyArgs),
    /// Cross-check the certified value against bisection shooting
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Power-law index, 1 <= P < 2
    #[arg(
        long = "P",
        alias = "p",
        value_name = "P",
        allow_negative_numbers = true
    )]
    pub power_index: Option<f64>,
    /// Star truncated boundary [default: 10 for P = 1, 5 otherwise]
    #[arg(long = "eta-inf", value_name = "ETA")]
    pub eta_inf: Option<f64>,
    /// Star initial curvature f*''(0)
    #[arg(long, default_value_t = 1.0)]
    pub curvature: f64,
    /// Continuation once f'' reaches zero: strict, extinction or complex
    #[arg(long = "curvature-policy", default_value = "complex")]
    pub policy: CurvaturePolicy,
}

impl ProblemArgs {
    fn params(&self) -> Result<ProblemParams, CliError> {
        let p = self
            .power_index
            .ok_or_else(|| CliError::Usage("missing required flag --P".into()))?;
        make_params(p).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn eta_inf(&self, params: &ProblemParams) -> f64 {
        self.eta_inf
            .unwrap_or_else(|| nitm::default_eta_inf_star(params))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Step size in star variables
    #[arg(long, default_value_t = 0.001)]
    pub h: f64,
    /// Write the star and rescaled profiles (CSV) to this file
    #[arg(long = "emit-profile", value_name = "PATH")]
    pub emit_profile: Option<PathBuf>,
    /// Keep every N-th node in the profile [default: at most 4000 rows]
    #[arg(long = "profile-stride", value_name = "N")]
    pub profile_stride: Option<usize>,
    /// Keep every node in the profile
    #[arg(long = "full-profile")]
    pub full_profile: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Coarsest step
    #[arg(long, default_value_t = 0.001)]
    pub h0: f64,
    /// Number of grids, each halving the step
    #[arg(long, default_value_t = 8)]
    pub levels: usize,
    /// Solve the levels one after another instead of in parallel
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl StudyArgs {
    fn run(&self) -> Result<RefinementStudy, CliError> {
        let params = self.problem.params()?;
        let cfg = StudyConfig {
            eta_inf_star: self.problem.eta_inf(&params),
            h0: self.h0,
            levels: self.levels,
            policy: self.problem.policy,
            star_curvature: self.problem.curvature,
            parallel: !self.sequential,
        };
        convergence::run_study(&params, &cfg).map_err(|e| convergence_error(cfg.policy, e))
    }

    /// Study from `--input` when given, computed otherwise.
    fn load_or_run(&self, input: Option<&Path>) -> Result<RefinementStudy, CliError> {
        let Some(path) = input else {
            return self.run();
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        report::read_study(&text)
            .and_then(|doc| doc.to_study())
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExtrapolateArgs {
    /// Study file (CSV or JSON) written by `study`; computed from flags otherwise
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Divisor in U(g+1,k+1) = U(g+1,k) + (U(g+1,k) - U(g,k)) / D
    #[arg(long, default_value_t = DEFAULT_DENOMINATOR)]
    pub denominator: f64,
    #[command(flatten)]
    pub study: StudyArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub extrapolate: ExtrapolateArgs,
    /// Agreement tolerance between neighbouring tableau entries
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub certify: CertifyArgs,
    /// Largest accepted |NITM - shooting|
    #[arg(long, default_value_t = 1e-5)]
    pub threshold: f64,
    /// Truncated boundary of the shooting integration
    #[arg(long = "oracle-eta-inf", default_value_t = oracle::DEFAULT_ETA_INF)]
    pub oracle_eta_inf: f64,
    /// Step of the shooting integration
    #[arg(long = "oracle-h", default_value_t = 1e-4)]
    pub oracle_h: f64,
    #[arg(long = "bracket-lo", default_value_t = 0.1)]
    pub bracket_lo: f64,
    #[arg(long = "bracket-hi", default_value_t = 1.0)]
    pub bracket_hi: f64,
}

fn emit(out: &OutputArgs, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &out.output {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn json<T: serde::Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report documents serialize");
    s.push('\n');
    s
}

fn check_denominator(d: f64) -> Result<(), CliError> {
    if d.is_finite() && d != 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "denominator must be finite and non-zero, got {d}"
        )))
    }
}

fn check_tol(name: &str, t: f64) -> Result<(), CliError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--{name} must be finite and non-negative, got {t}"
        )))
    }
}

pub fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = args.problem.params()?;
    let grid = GridSpec::new(args.problem.eta_inf(&params), args.h)?;
    let policy = args.problem.policy;
    let mut opts = SolveOptions::default()
        .with_policy(policy)
        .with_curvature(args.problem.curvature);
    if args.emit_profile.is_some() {
        opts = opts.full();
    }
    let result = nitm::solve(&params, &grid, opts).map_err(|e| match e {
        NitmError::BadCurvature(_) => CliError::Usage(e.to_string()),
        other => numerical(policy)(&other),
    })?;
    if let Some(path) = &args.emit_profile {
        let stride = if args.full_profile {
            1
        } else {
            args.profile_stride
                .unwrap_or_else(|| report::default_stride(grid.n_steps() + 1, PROFILE_MAX_ROWS))
        };
        let text = report::profile_csv(&result, stride).expect("full storage was requested");
        fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let doc = SolveDoc::new(&result, params.power_index(), args.h, policy);
    let text = match args.output.format {
        Format::Table => doc.table(),
        Format::Csv => doc.csv(),
        Format::Json => json(&doc),
    };
    emit(&args.output, &text, stdout)
}

pub fn cmd_study(args: &StudyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let study = args.run()?;
    let doc = StudyDoc::new(&study);
    let text = match args.output.format {
        Format::Table => doc.table(),
        Format::Csv => doc.csv(),
        Format::Json => json(&doc),
    };
    emit(&args.output, &text, stdout)
}

pub fn cmd_extrapolate(args: &ExtrapolateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    check_denominator(args.denominator)?;
    let study = args.study.load_or_run(args.input.as_deref())?;
    let tableau = convergence::extrapolate(&study, args.denominator);
    let doc = TableauDoc::new(&study, &tableau);
    let text = match args.study.output.format {
        Format::Table => doc.table(),
        Format::Csv => doc.csv(),
        Format::Json => json(&doc),
    };
    emit(&args.study.output, &text, stdout)
}

pub fn cmd_certify(args: &CertifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ex = &args.extrapolate;
    check_denominator(ex.denominator)?;
    check_tol("tol", args.tol)?;
    let study = ex.study.load_or_run(ex.input.as_deref())?;
    let tableau = convergence::extrapolate(&study, ex.denominator);
    let cert = convergence::certify(&tableau, args.tol);
    let doc = TableauDoc::new(&study, &tableau).with_certification(&cert, args.tol);
    let text = match ex.study.output.format {
        Format::Table => doc.table(),
        Format::Csv => doc.csv(),
        Format::Json => json(&doc),
    };
    emit(&ex.study.output, &text, stdout)
}

/// Returns whether the two methods agreed within the threshold.
pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let ex = &args.certify.extrapolate;
    check_denominator(ex.denominator)?;
    check_tol("tol", args.certify.tol)?;
    check_tol("threshold", args.threshold)?;
    let study_args = &ex.study;
    let study = study_args.load_or_run(ex.input.as_deref())?;
    let params = make_params(study.power_index).map_err(|e| CliError::Usage(e.to_string()))?;
    let tableau = convergence::extrapolate(&study, ex.denominator);
    let cert = convergence::certify(&tableau, args.certify.tol);

    let grid = GridSpec::new(args.oracle_eta_inf, args.oracle_h)?;
    let cfg = ShootingConfig::new(grid).with_bracket(args.bracket_lo, args.bracket_hi);
    let shot = oracle::solve_by_shooting(&params, &cfg).map_err(|e| match e {
        OracleError::BadConfig(_) | OracleError::NoSignChange { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Numerical(other.to_string()),
    })?;

    let difference = (cert.value - shot.curvature).abs();
    let doc = CompareDoc {
        schema_version: report::SCHEMA_VERSION,
        command: "compare".into(),
        power_index: params.power_index(),
        nitm_value: cert.value,
        nitm_decimals: cert.decimals,
        nitm_stop_reason: cert.stop.to_string(),
        oracle_value: shot.curvature,
        oracle_residual: shot.residual,
        oracle_iterations: shot.iterations,
        difference,
        threshold: args.threshold,
        pass: difference < args.threshold,
    };
    let text = match study_args.output.format {
        Format::Table => doc.table(),
        Format::Csv => doc.csv(),
        Format::Json => json(&doc),
    };
    emit(&study_args.output, &text, stdout)?;
    Ok(doc.pass)
}

/// Splices the entries of `--config FILE` in right after the subcommand so
/// that flags given explicitly on the command line win.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text =
        fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg = config::parse_config(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" {
            i += 2;
        } else if s.starts_with('-') {
            i += 1;
        } else {
            break;
        }
    }
    if i >= args.len() {
        return Ok(args);
    }
    let mut out: Vec<OsString> = args[..=i].to_vec();
    out.extend(cfg.to_args().into_iter().map(OsString::from));
    out.extend_from_slice(&args[i + 1..]);
    Ok(out)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = apply_config(args).and_then(|args| {
        let cli = match Cli::try_parse_from(args) {
            Ok(cli) => cli,
            Err(e) => {
                let code = if e.use_stderr() { 2 } else { 0 };
                let rendered = e.render().to_string();
                if code == 0 {
                    let _ = stdout.write_all(rendered.as_bytes());
                } else {
                    let _ = stderr.write_all(rendered.as_bytes());
                }
                return Ok(Some(code));
            }
        };
        match &cli.command {
            Command::Solve(a) => cmd_solve(a, stdout).map(|_| None),
            Command::Study(a) => cmd_study(a, stdout).map(|_| None),
            Command::Extrapolate(a) => cmd_extrapolate(a, stdout).map(|_| None),
            Command::Certify(a) => cmd_certify(a, stdout).map(|_| None),
            Command::Compare(a) => cmd_compare(a, stdout).map(|pass| (!pass).then_some(1)),
        }
    });
    match result {
        Ok(code) => code.unwrap_or(0),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
