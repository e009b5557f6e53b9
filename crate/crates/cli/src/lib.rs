//! Command-line front end for the renewal library.

pub mod args;
pub mod commands;
pub mod verify;

use std::io::Write;

use args::{Cli, Command, OutputArgs, VerifyArgs};
pub use commands::{CliError, Report};

/// Executes one parsed invocation.
///
/// Output files are written in one piece after the result is complete, so a
/// failed run never leaves a partial file behind.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (report, out) = match &cli.command {
        Command::Exact(a) => (commands::cmd_exact(a)?, &a.out),
        Command::Solve(a) => (commands::cmd_solve(a)?, &a.out),
        Command::Asympt(a) => (commands::cmd_asympt(a)?, &a.out),
        Command::Simulate(a) => (commands::cmd_simulate(a)?, &a.out),
        Command::Overshoot(a) => (commands::cmd_overshoot(a)?, &a.out),
        Command::Verify(a) => return run_verify(a),
    };
    emit(&report, out)
}

fn emit(report: &Report, out: &OutputArgs) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match &out.output {
        Some(path) => {
            std::fs::write(path, &report.body)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            if let Some(s) = &report.summary {
                println!("{s}");
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(report.body.as_bytes()).map_err(io)?;
            if let Some(s) = &report.summary {
                eprintln!("{s}");
            }
        }
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> Result<(), CliError> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    if !(1..=commands::MAX_WORKERS).contains(&args.workers) {
        return Err(CliError::Usage(format!(
            "--workers must lie in [1, {}], got {}",
            commands::MAX_WORKERS,
            args.workers
        )));
    }
    let checks = verify::run(args, |c| println!("{c}"));
    let failed = checks.iter().filter(|c| !c.passed()).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{failed} verification checks failed"
        )))
    }
}
