//! Experiment driver: argument handling, the subcommands and their reports.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use relbc_core::ErrorKind;

pub mod commands;
pub mod config;

pub use config::{Format, RunConfig, Source};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("property failure: {0}")]
    Property(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Capability(_) => 3,
            CliError::Property(_) => 4,
        }
    }
}

impl From<relbc_core::Error> for CliError {
    fn from(e: relbc_core::Error) -> Self {
        match e.kind() {
            ErrorKind::Capability => CliError::Capability(e.to_string()),
            ErrorKind::Usage | ErrorKind::Domain => CliError::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "relbc", version, about = "Relativistic bit commitment experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the field axioms on the configured field.
    FieldCheck(RunArgs),
    /// Value of the CHSH_Q game (optionally biased) and a strategy achieving it.
    GameValue(RunArgs),
    /// Build a cheating strategy and evaluate its success probability.
    Attack(RunArgs),
    /// Padded attacks over a (Q, m) grid against the bounds.
    Sweep(RunArgs),
    /// Compare Bob's view for d = 0 and d = 1 before the reveal.
    Hiding(RunArgs),
    /// Re-verify a transcript written by `attack`.
    Replay {
        transcript: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
}

/// Every key can be given as a flag; `--set key=value` takes any key.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat `key = value` file, overridden by flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Field order; shorthand for p and n with the default modulus.
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    /// Comma-separated coefficients, constant term first.
    #[arg(long)]
    pub modulus: Option<String>,
    /// standard | symmetrized
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub k0: Option<String>,
    /// exact | mc | auto
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// brute | search | file
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub strategy_file: Option<String>,
    #[arg(long)]
    pub strategy_out: Option<String>,
    #[arg(long)]
    pub restarts: Option<String>,
    #[arg(long)]
    pub max_iters: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub c: Option<String>,
    /// Field orders for sweep, e.g. `2,4,16`.
    #[arg(long)]
    pub qs: Option<String>,
    /// Round counts for sweep, e.g. `2..13` or `4,7,10`.
    #[arg(long)]
    pub ms: Option<String>,
    #[arg(long)]
    pub upto: Option<String>,
    #[arg(long)]
    pub triples: Option<String>,
    #[arg(long)]
    pub transcripts: Option<String>,
    #[arg(long)]
    pub transcripts_out: Option<String>,
    #[arg(long, short)]
    pub output: Option<String>,
    /// json | csv
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, CliError> {
        let named = [
            ("q", &self.q),
            ("p", &self.p),
            ("n", &self.n),
            ("modulus", &self.modulus),
            ("variant", &self.variant),
            ("m", &self.m),
            ("rho", &self.rho),
            ("k0", &self.k0),
            ("method", &self.method),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("strategy", &self.strategy),
            ("strategy_file", &self.strategy_file),
            ("strategy_out", &self.strategy_out),
            ("restarts", &self.restarts),
            ("max_iters", &self.max_iters),
            ("gamma", &self.gamma),
            ("c", &self.c),
            ("qs", &self.qs),
            ("ms", &self.ms),
            ("upto", &self.upto),
            ("triples", &self.triples),
            ("transcripts", &self.transcripts),
            ("transcripts_out", &self.transcripts_out),
            ("output", &self.output),
            ("format", &self.format),
        ];
        let mut out: Vec<(String, String)> = named
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {kv:?}")))?;
            out.push((k.trim().replace('-', "_"), v.to_string()));
        }
        Ok(out)
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        RunConfig::resolve(self.config.as_deref(), &self.overrides()?)
    }
}

/// A finished command: the report, whether its checked property held, and
/// lines for the terminal.
pub struct Outcome {
    pub report: serde_json::Value,
    pub passed: bool,
    pub summary: Vec<String>,
    /// Set when the command already wrote its main output itself.
    pub written: bool,
}

fn emit(cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    if !outcome.written {
        let text = serde_json::to_string_pretty(&outcome.report)? + "\n";
        write_output(cfg.output.as_deref(), text.as_bytes())?;
    }
    let mut err = io::stderr().lock();
    for line in &outcome.summary {
        writeln!(err, "{line}")?;
    }
    Ok(())
}

pub(crate) fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Other(format!("cannot write {}: {e}", p.display()))),
        None => Ok(io::stdout().lock().write_all(bytes)?),
    }
}

pub fn dispatch(command: &Command) -> Result<(RunConfig, Outcome), CliError> {
    let (args, run): (&RunArgs, fn(&RunConfig) -> Result<Outcome, CliError>) = match command {
        Command::FieldCheck(a) => (a, commands::field_check),
        Command::GameValue(a) => (a, commands::game_value),
        Command::Attack(a) => (a, commands::attack),
        Command::Sweep(a) => (a, commands::sweep),
        Command::Hiding(a) => (a, commands::hiding),
        Command::Replay { transcript, args } => {
            let cfg = args.resolve()?;
            let outcome = commands::replay(&cfg, transcript)?;
            return Ok((cfg, outcome));
        }
    };
    let cfg = args.resolve()?;
    let outcome = run(&cfg)?;
    Ok((cfg, outcome))
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let result = dispatch(&cli.command).and_then(|(cfg, outcome)| {
        emit(&cfg, &outcome)?;
        if outcome.passed {
            Ok(())
        } else {
            Err(CliError::Property("see report".into()))
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("relbc: {e}");
            e.exit_code()
        }
    }
}
