//! Command-line front end: CSV ingestion, PLA, PLA-versus-OLS comparison,
//! cut-off bounds and Monte Carlo studies.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use error::{CliError, CliResult};

use args::Command;

/// Runs the command and returns its emissions without writing anything.
pub fn execute(cli: &Cli) -> CliResult<commands::Emission> {
    match &cli.command {
        Command::Pla(a) => commands::cmd_pla(a),
        Command::Compare(a) => commands::cmd_compare(a),
        Command::Bounds(a) => commands::cmd_bounds(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Sample(a) => commands::cmd_sample(a),
    }
}

/// Parses `argv`, runs the command and writes its output. Returns the exit
/// code.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match execute(&cli).and_then(|out| emit(out, stdout)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: commands::Emission, stdout: &mut dyn Write) -> CliResult<()> {
    let mut files = Vec::new();
    let mut console = Vec::new();
    for (path, bytes) in out {
        match path {
            Some(p) => files.push((p, bytes)),
            None => console.push(bytes),
        }
    }
    io::write_files_atomic(&files)?;
    for bytes in console {
        stdout.write_all(&bytes).map_err(io::output_error)?;
    }
    stdout.flush().map_err(io::output_error)
}
