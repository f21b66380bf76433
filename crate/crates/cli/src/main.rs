use std::process::ExitCode;

use clap::Parser;
use lattice_approx_cli::{output::error_record, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) if report.passed == Some(false) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(Some(cli.command.name()), &e));
            ExitCode::from(2)
        }
    }
}
