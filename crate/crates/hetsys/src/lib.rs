//! Command-line front end for the invariant-form engine: model and bundle
//! file parsers, subcommands and report writers.

pub mod cli;
pub mod commands;
pub mod error;
pub mod grid;
pub mod parse;

use std::io::Write;

use cli::Cli;
use commands::{output_args, run, write_csv};
use error::{CliError, CliResult};

fn emit(cli: &Cli, outcome: &commands::Outcome) -> CliResult<()> {
    let out = output_args(&cli.command);
    let text = serde_json::to_string_pretty(&outcome.report)? + "\n";
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    if let Some(path) = &out.json {
        std::fs::write(path, &text)?;
    }
    if let Some(path) = &out.csv {
        let rows = outcome
            .table
            .as_ref()
            .ok_or_else(|| CliError::Usage(String::from("this command has no table for --csv")))?;
        write_csv(rows, std::fs::File::create(path)?)?;
    }
    Ok(())
}

/// Runs a parsed command line and returns the exit status:
/// 0 when every requested check passes, 1 on a failed check, 2 on bad input.
pub fn execute(cli: &Cli) -> i32 {
    let result = run(&cli.command).and_then(|o| emit(cli, &o).map(|_| o.pass));
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err @ CliError::Engine(_)) => {
            let report = serde_json::json!({"error": err.to_string(), "pass": false});
            let text = serde_json::to_string_pretty(&report).unwrap_or_default() + "\n";
            print!("{}", text);
            if let Some(path) = &output_args(&cli.command).json {
                if let Err(io) = std::fs::write(path, &text) {
                    eprintln!("hetsys: {}", io);
                }
            }
            eprintln!("hetsys: {}", err);
            err.exit_code()
        }
        Err(err) => {
            eprintln!("hetsys: {}", err);
            err.exit_code()
        }
    }
}
