//! The `juri` command line.

pub mod commands;
pub mod error;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

pub use commands::*;
pub use error::{CliError, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "juri", version, about = "Court decision outcome prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deduplicate and label a corpus and print its census.
    Ingest(IngestArgs),
    /// Train one model and write it to a file.
    Train(TrainArgs),
    /// Cross-validate the pipeline on a corpus.
    Evaluate(EvaluateArgs),
    /// Predict decision and unanimity for one description.
    Predict(PredictArgs),
    /// Serve predictions over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic corpus.
    GenSynthetic(GenSyntheticArgs),
}

pub const LOG_ENV: &str = "JURI_LOG_LEVEL";

pub fn init_logging(default_level: &str) {
    let filter = tracing_subscriber::EnvFilter::try_from_env(LOG_ENV)
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

/// Runs one command; returns the text for stdout.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Ingest(a) => cmd_ingest(a).map(|r| json_line(&r)),
        Command::Train(a) => cmd_train(a).map(|r| json_line(&r)),
        Command::Evaluate(a) => cmd_evaluate(a).map(|r| if a.json { json_line(&r) } else { r.render_table() }),
        Command::Predict(a) => cmd_predict(a).map(|r| json_line(&r)),
        Command::Serve(a) => cmd_serve(a).map(|_| String::new()),
        Command::GenSynthetic(a) => cmd_gen_synthetic(a).map(|r| json_line(&r)),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Errors go to `stderr` as one JSON line.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            let err = CliError::usage(first);
            let _ = writeln!(stderr, "{}", err.to_json_line());
            return err.exit_code();
        }
    };
    init_logging(if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" });
    match execute(&cli.command) {
        Ok(out) => {
            if !out.is_empty() {
                let _ = writeln!(stdout, "{}", out.trim_end());
            }
            0
        }
        Err(err) => {
            tracing::debug!(?err, "command failed");
            let _ = writeln!(stderr, "{}", err.to_json_line());
            err.exit_code()
        }
    }
}
