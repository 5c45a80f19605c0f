// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nzc::config::Settings;
use nzc::ledger_file::read_ledger;
use nzc::verify::{run_all, VerifyPlan};
use nzc::{emit_report, run_experiment, ExperimentConfig};
use nzc_core::accountant::{delta_for_eps, eps_for_delta};

#[derive(Debug, Parser)]
#[command(name = "nzc", version, about = "Private aggregation of teacher votes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Answer student queries with a private aggregation mechanism.
    Run {
        /// TOML file with the same keys as the flags; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Check the mechanisms against independent oracles.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Smaller instance counts for a fast smoke check.
        #[arg(long)]
        quick: bool,
    },
    /// Recompute the privacy budget of an exported ledger.
    Account {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        /// Also report the delta achieved at this epsilon.
        #[arg(long)]
        eps: Option<f64>,
    },
}

fn run(config: Option<PathBuf>, flags: Settings) -> anyhow::Result<()> {
    let settings = match config {
        Some(path) => Settings::from_toml(&path)?.overlay(flags),
        None => flags,
    };
    let out = settings.out.clone().unwrap_or_else(|| PathBuf::from("nzc-out"));
    let cfg = ExperimentConfig::from_settings(&settings)?;
    let run = run_experiment(&cfg)?;
    emit_report(&run, &out)?;

    let s = &run.report.summary;
    println!("queries {}", s.queries);
    if let Some(a) = &s.accuracy {
        println!("clean accuracy {}%", a.clean);
        println!("mechanism accuracy {}%", a.mechanism);
    }
    if let Some(e) = s.privacy.moments_epsilon {
        println!("epsilon {e} at delta {}", s.privacy.delta);
    }
    match s.privacy.gaussian_bound_applicable {
        Some(true) => println!(
            "epsilon {} at delta {}",
            s.privacy.gaussian_epsilon.expect("set when applicable"),
            s.privacy.gaussian_delta.expect("set when applicable")
        ),
        Some(false) => println!("classical Gaussian bound not applicable (sigma too small)"),
        None => {}
    }
    println!("report written to {}", out.display());
    eprintln!("runtime {:.3}s", run.runtime.as_secs_f64());
    Ok(())
}

fn verify(seed: u64, quick: bool) -> anyhow::Result<bool> {
    let plan = if quick { VerifyPlan::quick(seed) } else { VerifyPlan::full(seed) };
    let mut ok = true;
    for outcome in run_all(&plan)? {
        println!("{outcome}");
        ok &= outcome.passed;
    }
    Ok(ok)
}

fn account(path: PathBuf, delta: f64, eps: Option<f64>) -> anyhow::Result<()> {
    let file = read_ledger(&path)?;
    let ledger = file
        .to_ledger()
        .with_context(|| format!("{}: cannot rebuild ledger", path.display()))?;
    let stored = file.total_moments()?;
    for ((order, a), b) in ledger.curve().iter().zip(stored.values()) {
        if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            bail!(
                "{}: stored moment of order {order} is {b}, recomputed {a}",
                path.display()
            );
        }
    }
    println!("queries {}", ledger.query_count());
    println!("laplace queries {}", ledger.laplace_queries());
    println!("gaussian queries {}", ledger.gaussian_queries());
    if ledger.laplace_queries() > 0 {
        println!("epsilon {:.11e} at delta {delta:e}", eps_for_delta(ledger.curve(), delta)?);
        if let Some(e) = eps {
            println!("delta {:.11e} at epsilon {e:e}", delta_for_eps(ledger.curve(), e)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, settings } => run(config, settings).map(|()| true),
        Command::Verify { seed, quick } => verify(seed, quick),
        Command::Account { ledger, delta, eps } => account(ledger, delta, eps).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
