//! Command-line harness for `bayeskit`: built-in targets, configuration,
//! deterministic multi-chain execution and file outputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod selftest;
pub mod targets;

use cli::{Cli, Command, TargetsAction};
use config::{RunConfig, SmcConfig, ViConfig};
pub use error::CliError;

/// Executes a parsed command line; returns the process exit code.
pub fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(args) => commands::execute_run(&RunConfig::from_settings(args.settings()?)?)?,
        Command::RunSmc(args) => {
            commands::execute_smc(&SmcConfig::from_settings(args.settings()?)?)?
        }
        Command::RunVi(args) => commands::execute_vi(&ViConfig::from_settings(args.settings()?)?)?,
        Command::Targets {
            action: TargetsAction::List,
        } => {
            println!("{:<16} {:>11} {:>9}", "name", "default_dim", "moments");
            for name in targets::TARGET_NAMES {
                let t = targets::builtin(name, None, commands::data_key(0))?;
                let moments = if t.analytic_moments.is_some() {
                    "analytic"
                } else {
                    "-"
                };
                println!("{:<16} {:>11} {:>9}", name, t.dim(), moments);
            }
        }
        Command::Selftest { seed } => {
            let mut failed = 0;
            for check in selftest::run_selftest(seed) {
                match check.outcome {
                    Ok(()) => println!("PASS {}", check.name),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL {}: {e}", check.name);
                    }
                }
            }
            return Ok(if failed == 0 { 0 } else { 1 });
        }
    }
    Ok(0)
}
