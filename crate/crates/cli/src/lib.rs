//! Command-line front end for the heatroute simulator.

pub mod args;
pub mod commands;
pub mod error;
pub mod export;
pub mod manifest;
pub mod scenario;

use std::io::Write;

use clap::Parser;

pub use args::Cli;
pub use error::{CliError, Failure};

/// Runs a parsed command, writing normal output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    use args::{Command, PersonasCommand};
    match &cli.command {
        Command::GenerateGrid(a) => commands::generate_grid_cmd(a, out),
        Command::Validate(a) => commands::validate_cmd(a, out),
        Command::Score(a) => commands::score_cmd(a, out),
        Command::Simulate(a) => commands::simulate_cmd(a, out).map(|_| ()),
        Command::Evaluate(a) => commands::evaluate_cmd(a, out),
        Command::Report(a) => commands::report_cmd(a, out),
        Command::Personas { command } => match command {
            PersonasCommand::List { personas, json } => commands::personas_list_cmd(personas, *json, out),
        },
    }
}

/// Parses `argv`, runs it and returns the process exit code. Errors are
/// printed to stderr as a JSON object.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Failure::Usage.exit_code() } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.kind.exit_code()
        }
    }
}
