//! `hybridqm`: scenario runner, self-test and limiting-case table.

mod config;
mod failure;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybridqm::acceptance;
use hybridqm::uncertainty::limiting_case_suite;
use hybridqm::HybridParams;

use failure::Failure;

#[derive(Parser)]
#[command(
    name = "hybridqm",
    version,
    about = "Pseudo-spectral hybrid (q, alpha) quantum mechanics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; defaults to `output.directory` relative to the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 0 even when results carry blocking reliability flags.
        #[arg(long)]
        override_flags: bool,
    },
    /// Run the built-in acceptance suite and print a pass/fail table.
    Selftest,
    /// Print the limiting-case table for one parameter pair.
    Limits {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        alpha: f64,
    },
}

fn selftest() -> Result<(), Failure> {
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{} ({})", o.id, o.title))
        .collect();
    println!(
        "{} of {} criteria passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Failed(format!(
            "failing criteria: {}",
            failed.join(", ")
        )))
    }
}

fn limits(q: f64, alpha: f64) -> Result<(), Failure> {
    let params = HybridParams::new(q, alpha)?;
    let table = limiting_case_suite(&params)?;
    for r in &table.rows {
        println!(
            "({})  {}  value {:.12e}  reference {:.12e}  tol {:.0e}",
            r.case,
            if r.pass { "PASS" } else { "FAIL" },
            r.value,
            r.reference,
            r.tolerance
        );
        println!("     {}", r.description);
        println!("     {}", r.note);
    }
    let scan = &table.minimal_length;
    for (((q, d), s), edge) in scan
        .q_values
        .iter()
        .zip(&scan.dx_min)
        .zip(&scan.sigma_at_min)
        .zip(&scan.at_scan_edge)
    {
        println!(
            "     q = {q}: min dx = {d:.6e} at sigma = {s:.4}{}",
            if *edge { " (scan edge)" } else { "" }
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            override_flags,
        } => scenario::run(
            &config,
            &scenario::RunOptions {
                out,
                override_flags,
            },
        ),
        Command::Selftest => selftest(),
        Command::Limits { q, alpha } => limits(q, alpha),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hybridqm: {f}");
            f.exit_code()
        }
    }
}
