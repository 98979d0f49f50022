//! Command-line front end: argument and config handling, dispatch, and the
//! exit-code contract (0 success, 2 validation error, 3 numerical failure,
//! with a JSON error document on stderr).

pub mod commands;
pub mod config;
pub mod output;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use serde_json::json;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "schema_version": output::SCHEMA_VERSION,
            "error": { "kind": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() }
        })
        .to_string()
    }
}

impl From<ferrojet::Error> for CliError {
    fn from(e: ferrojet::Error) -> Self {
        use ferrojet::Error as E;
        match e {
            E::Domain(_) | E::Parameter(_) | E::Regime(_) | E::GridMismatch(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ferrojet", version, about = "Solitary waves on a ferrofluid jet: dispersion, amplitude equations and full solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dispersion relation on a k grid: CSV (k, f, c^2, g) and a JSON summary
    Dispersion(Flags),
    /// Weakly nonlinear coefficients with their extraction cross-checks
    Wnl(Flags),
    /// Solve one branch (kdv, nls+, nls-, gzcs); several epsilons run as a ladder
    Solve(Flags),
    /// Oracle suites: greens, dno, specfun, extraction (all when --suite is absent)
    Checks(Flags),
    /// Convergence study over an epsilon ladder with a log-log slope fit
    Converge(Flags),
}

#[derive(Args, Debug, Default, Clone)]
struct Flags {
    /// Flat key = value config file; flags given here win
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<String>,
    /// One value or a comma-separated list
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    /// linear | custom (with --nu2, --nu3)
    #[arg(long)]
    law: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu3: Option<String>,
    /// Grid size N (power of two); sample count for `dispersion`
    #[arg(long)]
    grid_n: Option<String>,
    /// Grid half length L; largest k for `dispersion`
    #[arg(long)]
    grid_l: Option<String>,
    /// Cutoff width of chi_0
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// 0 | 1 | 2 | oracle: realization of K inside L for the full equation
    #[arg(long)]
    k_order: Option<String>,
    /// kdv | nls+ | nls- | gzcs
    #[arg(long, allow_hyphen_values = true)]
    branch: Option<String>,
    /// greens | dno | specfun | extraction
    #[arg(long)]
    suite: Option<String>,
    /// Newton tolerance on max |residual|
    #[arg(long)]
    tol: Option<String>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            cfg.apply_file(p)?;
        }
        let pairs = [
            ("gamma", &self.gamma),
            ("epsilon", &self.epsilon),
            ("law", &self.law),
            ("nu2", &self.nu2),
            ("nu3", &self.nu3),
            ("grid_n", &self.grid_n),
            ("grid_l", &self.grid_l),
            ("delta", &self.delta),
            ("out", &self.out),
            ("k_order", &self.k_order),
            ("branch", &self.branch),
            ("suite", &self.suite),
            ("tol", &self.tol),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, v).map_err(|m| CliError::Validation(format!("--{}: {m}", k.replace('_', "-"))))?;
            }
        }
        cfg.finish()?;
        Ok(cfg)
    }
}

fn write_run_metadata(command: &str, cfg: &RunConfig, files: &[String], error: Option<&CliError>) -> Result<(), CliError> {
    let mut sink = output::Sink::new(&cfg.out)?;
    let doc = json!({
        "command": command,
        "timestamp": chrono::Utc::now().to_rfc3339(),
        "config": cfg,
        "files": files,
        "status": if error.is_none() { "ok" } else { "failed" },
        "error": error.map(|e| e.to_string()),
    });
    sink.json("run.json", &doc)
}

fn dispatch(args: &[String]) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Validation(e.to_string().trim().to_string())),
    };
    let (name, flags, run): (&str, &Flags, fn(&RunConfig) -> Result<commands::Outcome, CliError>) = match &cli.command {
        Command::Dispersion(f) => ("dispersion", f, commands::dispersion),
        Command::Wnl(f) => ("wnl", f, commands::wnl),
        Command::Solve(f) => ("solve", f, commands::solve),
        Command::Checks(f) => ("checks", f, commands::checks),
        Command::Converge(f) => ("converge", f, commands::converge),
    };
    let cfg = flags.resolve()?;
    match run(&cfg) {
        Ok(out) => {
            write_run_metadata(name, &cfg, &out.files, out.failure.as_ref())?;
            out.failure.map_or(Ok(()), Err)
        }
        Err(e) => {
            // validation failures leave no output behind
            if e.exit_code() != 2 {
                let _ = write_run_metadata(name, &cfg, &[], Some(&e));
            }
            Err(e)
        }
    }
}

/// Run with explicit arguments (the first is the program name) and return
/// the process exit code.
pub fn run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
