// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Usage};
use commands::{Context, ScanConfig};

/// Exit status for an error: 2 for bad input, 1 for everything else.
fn status(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<coboson::Error>() {
        Some(coboson::Error::Consistency(_)) => 1,
        // library I/O only happens while reading distribution files
        Some(_) => 2,
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    if !(cli.tol > 0.0) {
        return Err(anyhow::Error::new(Usage(format!(
            "--tol must be positive, got {}",
            cli.tol
        ))));
    }
    let ctx = Context {
        format: cli.format,
        out: cli.out,
        tol: cli.tol,
        seed: cli.seed,
    };
    match cli.command {
        Command::Quality { dist, n } => commands::quality(&ctx, &dist, &n),
        Command::Majorize {
            dist,
            n,
            max_prefixes,
            target_z,
            proof_levels,
        } => commands::majorize(&ctx, &dist, n, max_prefixes, target_z, proof_levels),
        Command::Counterexample { epsilon, n, d } => commands::counterexample(&ctx, epsilon, n, d),
        Command::Oracle { d, n, trials } => commands::oracle(&ctx, d, n, trials),
        Command::Scan {
            family,
            z,
            s,
            d,
            file,
            n,
            tail,
            max_prefixes,
        } => commands::scan(
            &ctx,
            &ScanConfig {
                family,
                z,
                s,
                d,
                file,
                n,
                tail,
                max_prefixes,
            },
        ),
        Command::Family { dist } => commands::family(&ctx, &dist),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(status(&err))
        }
    }
}
