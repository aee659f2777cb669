use std::process::ExitCode;

use clap::Parser;
use fedcontract::Error;
use fedcontract_cli::{run, Cli, UsageError, LOG_ENV};

// 0: every check passed. 1: a check failed or the instance has no feasible
// menu. 2: bad arguments, bad config or I/O failure.
fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<UsageError>().is_some()
                || e.downcast_ref::<std::io::Error>().is_some()
                || e.downcast_ref::<csv::Error>().is_some()
                || matches!(
                    e.downcast_ref::<Error>(),
                    Some(Error::Config(_) | Error::Guard(_))
                );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
