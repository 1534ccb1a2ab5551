mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use report::Report;

fn run(cli: &Cli) -> anyhow::Result<Report> {
    match &cli.command {
        Command::Qary { q, solver } => commands::qary(*q, solver),
        Command::QaryTable { q, solver } => commands::qary_table(*q, solver),
        Command::Cw { alpha, cw } => commands::cw(*alpha, cw),
        Command::CwCurve { alpha, step, cw } => commands::cw_curve(*alpha, *step, cw),
        Command::Verify { n, q, weight, seed, samples } => commands::verify(*n, *q, *weight, *seed, *samples),
        Command::Recertify { path } => commands::recertify(path),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = report.emit(cli.format, cli.output.as_deref()) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if report.failed {
        eprintln!("one or more checks failed");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
