mod commands;
mod config;
mod failure;
mod grid;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version requests go to stdout and are not errors
            return ExitCode::from(if e.use_stderr() { failure::CONFIG } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Solve(flags) => commands::cmd_solve(flags, false),
        Command::Minimize(flags) => commands::cmd_solve(flags, true),
        Command::Verify(args) => commands::cmd_verify(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
