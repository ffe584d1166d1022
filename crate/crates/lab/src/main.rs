//! `adiab` — CLI for the adiabatic-evolution laboratory.
//!
//! ```text
//! adiab run   --example ex3-1u [--param k=v ...] --out report.json
//! adiab sweep --example ex3-1u --metric uv-gap --eps 2^-3:2^-12 --out sweep.json [--csv]
//! adiab check --suite {invariants|gallery|rates}
//! ```
//!
//! `ADIAB_THREADS` caps the worker count.

use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use adiab_core::family::Params;
use adiab_lab::{report, run_example, run_sweep, suites, EpsGrid, Metric};

#[derive(Parser)]
#[command(name = "adiab", about = "Adiabatic theorems at desk scale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a registered example's designated checks and emit a JSON report.
    Run {
        #[arg(long)]
        example: String,
        /// Example parameters as key=value (repeatable).
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep a metric over an ε grid and emit a JSON (or CSV) report.
    Sweep {
        #[arg(long)]
        example: String,
        #[arg(long)]
        metric: String,
        /// Geometric grid, e.g. 2^-3:2^-12.
        #[arg(long, default_value = "2^-3:2^-12")]
        eps: String,
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Emit two-column eps,value CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Run a check suite; exits nonzero on failure.
    Check {
        #[arg(long)]
        suite: String,
    },
}

fn parse_params(pairs: &[String]) -> Result<Params> {
    let mut p = Params::new();
    for s in pairs {
        p.parse_pair(s).map_err(|e| anyhow!("bad --param {s}: {e}"))?;
    }
    Ok(p)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { example, params, out } => {
            let params = parse_params(&params)?;
            let rep = run_example(&example, &params).map_err(|e| anyhow!(e))?;
            let json = serde_json::to_string_pretty(&rep)?;
            std::fs::write(&out, json).with_context(|| format!("writing {}", out.display()))?;
            println!("{}: {}", rep.example, rep.verdict);
            for c in &rep.checks {
                println!("  [{}] {} — {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.details);
            }
            if !rep.passed {
                std::process::exit(1);
            }
            Ok(())
        }
        Command::Sweep { example, metric, eps, params, out, csv } => {
            let params = parse_params(&params)?;
            let metric = Metric::parse(&metric).map_err(|e| anyhow!(e))?;
            let grid = EpsGrid::parse(&eps).map_err(|e| anyhow!(e))?;
            let rep = run_sweep(&example, &params, metric, &grid).map_err(|e| anyhow!(e))?;
            let body = if csv {
                report::to_csv(&rep)
            } else {
                serde_json::to_string_pretty(&rep)?
            };
            std::fs::write(&out, body).with_context(|| format!("writing {}", out.display()))?;
            match rep.slope {
                Some(s) => println!(
                    "{} {}: slope {:.4} ± {:.4}",
                    rep.example,
                    rep.metric,
                    s,
                    rep.stderr.unwrap_or(f64::NAN)
                ),
                None => println!("{} {}: no slope (saturated or short)", rep.example, rep.metric),
            }
            Ok(())
        }
        Command::Check { suite } => {
            let outcomes = suites::run_suite(&suite).map_err(|e| anyhow!(e))?;
            let mut ok = true;
            for o in &outcomes {
                println!("[{}] {} — {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.details);
                ok &= o.passed;
            }
            if !ok {
                std::process::exit(1);
            }
            Ok(())
        }
    }
}
