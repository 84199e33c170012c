//! `gaugesim`: simulate, bound, verify and compare Trotterized lattice
//! gauge theories from a TOML configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gaugesim::verify::{Faults, Suite};
use serde::Serialize;

use commands::{GlobalOptions, DEFAULT_MAX_MEM};
use config::RunConfig;

/// Failures that end a run with exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad invocation or configuration, or an instance refused as too large.
    #[error("{kind}: {message}")]
    Usage { kind: &'static str, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn usage(kind: &'static str, message: String) -> Self {
        CliError::Usage { kind, message }
    }
}

impl From<gaugesim::Error> for CliError {
    fn from(e: gaugesim::Error) -> Self {
        use gaugesim::Error as E;
        let kind = match &e {
            E::TooLarge(_) => "too_large",
            E::UnsupportedGroup(_) => "unsupported_group",
            E::InvalidLattice(_) => "invalid_lattice",
            E::NoAncilla(_) => "no_ancilla",
            E::OutOfRange { .. } => "out_of_range",
            _ => "invalid_argument",
        };
        CliError::usage(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    message: &'a str,
}

#[derive(Parser, Debug)]
#[command(name = "gaugesim", version, about = "Trotterized finite-group lattice gauge theory simulator")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `output`, else ./gaugesim-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random probes; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for state-vector kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Memory cap in bytes; larger instances are refused.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_MEM)]
    max_mem: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Group,
    Gauge,
    Stator,
    Trotter,
    Atomic,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Group => Suite::Group,
            SuiteArg::Gauge => Suite::Gauge,
            SuiteArg::Stator => Suite::Stator,
            SuiteArg::Trotter => Suite::Trotter,
            SuiteArg::Atomic => Suite::Atomic,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    ThetaLeftSign,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trotterized time evolution; writes series.csv and simulate.json.
    Simulate,
    /// Analytic commutator and Trotter bounds; writes bounds.json.
    Bounds,
    /// Run invariant suites; exit code 1 if any check fails.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Corrupt an internal table to test that the suites notice.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Measured Trotter error against the bounds for a list of step counts.
    Compare,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage("usage", "this command needs --config PATH".into()))?;
    RunConfig::load(path)
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("usage", "--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage("usage", e.to_string()))?;
    }
    let cfg = match cli.command {
        Command::Verify { .. } => None,
        _ => Some(load_config(cli)?),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("gaugesim-out"));
    let seed = cli.seed.or_else(|| cfg.as_ref().and_then(|c| c.seed)).unwrap_or(0);
    let opts = GlobalOptions {
        out,
        seed,
        max_mem: cli.max_mem,
    };
    match (&cli.command, cfg) {
        (Command::Simulate, Some(c)) => commands::simulate(&c, &opts),
        (Command::Bounds, Some(c)) => commands::bounds_cmd(&c, &opts),
        (Command::Compare, Some(c)) => commands::compare_cmd(&c, &opts),
        (Command::Verify { suite, inject_fault }, _) => {
            let faults = Faults {
                theta_left_sign: matches!(inject_fault, Some(FaultArg::ThetaLeftSign)),
            };
            commands::verify_cmd((*suite).into(), faults, &opts)
        }
        _ => unreachable!("config loaded for every config command"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.summary);
            if o.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("assertion failure");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let (kind, message) = match &e {
                CliError::Usage { kind, message } => (*kind, message.as_str()),
                CliError::Io(m) => ("io", m.as_str()),
            };
            let diag = serde_json::to_string(&Diagnostic { error: kind, message }).expect("diagnostic serialises");
            eprintln!("{diag}");
            ExitCode::from(2)
        }
    }
}
