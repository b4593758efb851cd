//! The `rarity` command line: every engine operation as a subcommand, plus a
//! one-shot reproduction bundle.
//!
//! [`run`] never calls `process::exit`; it returns 0 on success, 2 on a
//! usage error and 1 on a runtime error.

use std::ffi::OsString;
use std::io::Write;

use clap::{CommandFactory, FromArgMatches};

use rarity_core::xprec::Precision;

pub mod args;
mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod report;

use args::Cli;

/// Environment variable consulted when `--precision` is absent.
pub const PRECISION_ENV: &str = "RARITY_PRECISION";
/// Working precision when neither the flag nor the environment sets one.
pub const DEFAULT_PRECISION: u32 = 64;
/// Smallest accepted working precision.
pub const MIN_PRECISION: u32 = 16;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or argument values; exit status 2.
    Usage(String),
    /// The operation itself failed; exit status 1.
    Runtime(String),
}

impl From<rarity_core::Error> for CliError {
    fn from(e: rarity_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

/// Wraps an engine error raised while interpreting arguments.
pub(crate) fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Settings shared by every subcommand.
#[derive(Clone, Copy, Debug)]
pub struct Context {
    pub precision: Precision,
    pub seed: u64,
    pub digits: usize,
}

impl Context {
    /// `rarity <version> precision=<p> seed=<s>`, stamped on every output.
    pub fn stamp(&self) -> String {
        format!(
            "rarity {VERSION} precision={} seed={}",
            self.precision.digits(),
            self.seed
        )
    }
}

/// What a subcommand produced, written out once it has finished.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
}

/// Runs the program on `argv` (including the program name) against the
/// process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(Parse::Clap(e)) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return e.exit_code();
        }
        Err(Parse::Cli(e)) => return report_error(&e, err),
    };
    match execute(cli) {
        Ok(o) => {
            let _ = err.write_all(o.stderr.as_bytes());
            if out
                .write_all(o.stdout.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return 1;
            }
            0
        }
        Err(e) => report_error(&e, err),
    }
}

fn report_error(e: &CliError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {}", e.message());
    if matches!(e, CliError::Usage(_)) {
        let _ = writeln!(err, "\nFor more information, try '--help'.");
    }
    e.exit_code()
}

enum Parse {
    Clap(clap::Error),
    Cli(CliError),
}

/// Parses `argv`, then again with the config file's settings appended for
/// every flag the command line left unset. Flags required by the subcommand
/// may come from the file alone, so the first pass tolerates their absence
/// when a config file is named.
fn parse(argv: &[OsString]) -> Result<Cli, Parse> {
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let lenient = Cli::command()
                .ignore_errors(true)
                .try_get_matches_from(argv);
            match lenient {
                Ok(m)
                    if m.get_one::<std::path::PathBuf>("config").is_some()
                        && m.subcommand().is_some() =>
                {
                    m
                }
                _ => return Err(Parse::Clap(e)),
            }
        }
    };
    let matches = match matches.get_one::<std::path::PathBuf>("config") {
        Some(path) => {
            let merged = config::merge(argv, &matches, path).map_err(Parse::Cli)?;
            Cli::command()
                .try_get_matches_from(merged)
                .map_err(Parse::Clap)?
        }
        None => matches,
    };
    Cli::from_arg_matches(&matches).map_err(Parse::Clap)
}

/// `--precision`, else the environment, else [`DEFAULT_PRECISION`].
fn resolve_precision(flag: Option<u32>) -> Result<Precision, CliError> {
    let digits = match flag {
        Some(d) => d,
        None => match std::env::var(PRECISION_ENV) {
            Ok(text) => text.trim().parse::<u32>().map_err(|_| {
                CliError::Usage(format!("{PRECISION_ENV}={text:?} is not a digit count"))
            })?,
            Err(std::env::VarError::NotPresent) => DEFAULT_PRECISION,
            Err(e) => return Err(CliError::Usage(format!("{PRECISION_ENV}: {e}"))),
        },
    };
    if digits < MIN_PRECISION {
        return Err(CliError::Usage(format!(
            "precision must be at least {MIN_PRECISION} digits, got {digits}"
        )));
    }
    Precision::new(digits).map_err(usage)
}

fn execute(cli: Cli) -> Result<Output, CliError> {
    let ctx = Context {
        precision: resolve_precision(cli.global.precision)?,
        seed: cli.global.seed,
        digits: cli.global.digits as usize,
    };
    let command = cli.command;
    match cli.global.workers {
        None => commands::dispatch(command, &ctx),
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Runtime(format!("cannot start {w} workers: {e}")))?;
            pool.install(|| commands::dispatch(command, &ctx))
        }
    }
}
