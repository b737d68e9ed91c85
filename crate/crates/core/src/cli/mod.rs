//! Command-line front end.
//!
//! [`run`] takes the full argument vector (program name first) and returns
//! the process exit code: 0 success, 1 check failure, 2 configuration
//! error, 3 numerical failure.
//!
//! `--config FILE` reads `key = value` lines (`#` starts a comment). Each
//! line becomes `--key value`, or just `--key` for `true`, and is inserted
//! ahead of the command-line flags so that explicit flags win.

mod commands;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::func::FlowFunction;
use crate::qrdyn::ShiftStrategy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "isoflow", version, about = "Isospectral flows, QR dynamics and billiards")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub(crate) struct Common {
    /// Matrix dimension.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated eigenvalues or a preset (hexagon, cuboctahedron, bitorus).
    #[arg(long, allow_hyphen_values = true)]
    spectrum: Option<String>,
    /// identity | log | poly:c0,c1,... | shiftlog:s
    #[arg(long = "f", default_value = "identity")]
    f: FlowFunction,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value = "isoflow-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Omit the generation timestamp from every output file.
    #[arg(long)]
    no_timestamp: bool,
    /// Key-value file with default flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a Lax flow and report its invariants.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Start from the diagonal matrix of the spectrum.
        #[arg(long)]
        diag: bool,
        #[arg(long, value_enum, default_value = "integrate")]
        solver: Solver,
    },
    /// Norming constants, reconstruction and their evolution.
    Invspec {
        #[command(flatten)]
        common: Common,
        /// Comma-separated eigenvalues to rebuild from (norming constants drawn from the seed).
        #[arg(long, allow_hyphen_values = true)]
        lambdas: Option<String>,
    },
    /// Bidiagonal chart coordinates and the chart flow.
    Chart {
        #[command(flatten)]
        common: Common,
        /// 1-based permutation, comma-separated. Defaults to decreasing order.
        #[arg(long)]
        pi: Option<String>,
    },
    /// Shifted QR iteration and the QR/flow identities.
    Qr {
        #[command(flatten)]
        common: Common,
        /// none | rayleigh | wilkinson | fixed:s
        #[arg(long, default_value = "wilkinson")]
        strategy: ShiftStrategy,
        /// Named test matrix instead of a random one.
        #[arg(long, value_enum)]
        matrix: Option<NamedMatrix>,
        #[arg(long, value_enum)]
        check: Option<QrCheck>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long, default_value_t = crate::qrdyn::DEFAULT_DEFLATION_TOL)]
        deflation_tol: f64,
    },
    /// Cholesky-type LU iteration on a positive definite matrix.
    Cholesky {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Ellipsoid billiard orbit.
    Billiard {
        #[command(flatten)]
        common: Common,
        /// Semi-axes of the ellipsoid, comma-separated.
        #[arg(long = "C", default_value = "2,1")]
        c: String,
        #[arg(long, default_value_t = 100)]
        bounces: usize,
        #[arg(long, value_enum)]
        check: Option<BilliardCheck>,
        /// Initial boundary point (random when omitted).
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Initial direction (random when omitted).
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Selfcheck {
        /// Comma-separated criterion numbers (all when omitted).
        #[arg(long)]
        only: Option<String>,
        /// Also write selfcheck.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Solver {
    Integrate,
    Symes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum NamedMatrix {
    /// `[[0, 1], [1, 0]]`.
    #[value(name = "zero-diag-2")]
    ZeroDiag2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum QrCheck {
    Interpolation,
    Power,
    TodaExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum BilliardCheck {
    Mv,
}

/// Outcome of a command that ran to completion.
pub(crate) enum Outcome {
    Ok,
    CheckFailed(String),
}

#[derive(Debug)]
pub(crate) enum CliError {
    Config(String),
    Numerical(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Domain(_) | Error::Io(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("I/O error: {e}"))
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Flow { common, diag, solver } => commands::flow(&common, diag, solver, out),
        Command::Invspec { common, lambdas } => commands::invspec(&common, lambdas.as_deref(), out),
        Command::Chart { common, pi } => commands::chart(&common, pi.as_deref(), out),
        Command::Qr {
            common,
            strategy,
            matrix,
            check,
            max_steps,
            deflation_tol,
        } => commands::qr(&common, strategy, matrix, check, max_steps, deflation_tol, out),
        Command::Cholesky { common, steps } => commands::cholesky(&common, steps, out),
        Command::Billiard {
            common,
            c,
            bounces,
            check,
            x,
            y,
        } => commands::billiard(&common, &c, bounces, check, x.as_deref(), y.as_deref(), out),
        Command::Selfcheck {
            only,
            out: dir,
            no_timestamp,
            config: _,
        } => commands::selfcheck(only.as_deref(), dir.as_deref(), no_timestamp, out),
    };
    match result {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::CheckFailed(msg)) => {
            let _ = writeln!(err, "check failed: {msg}");
            EXIT_CHECK
        }
        Err(CliError::Config(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_CONFIG
        }
        Err(CliError::Numerical(msg)) => {
            let _ = writeln!(err, "numerical failure: {msg}");
            EXIT_NUMERICAL
        }
    }
}

/// Splices the flags of a `--config` file right after the subcommand.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            path = Some(args.get(i + 1).ok_or("--config needs a file")?.clone());
            break;
        }
        if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            break;
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut extra = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key = value", lineno + 1))?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("{path}:{}: invalid key", lineno + 1));
        }
        match value {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            v => {
                extra.push(format!("--{key}"));
                extra.push(v.to_string());
            }
        }
    }
    if args.len() < 2 {
        return Ok(args);
    }
    let mut out = args[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}
