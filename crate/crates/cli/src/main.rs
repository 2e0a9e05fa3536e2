use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use infobound::harness::{monte_carlo_risk, rate_fit, run_verification_suite, write_csv, ExperimentPlan, Suite, SuiteReport};

#[derive(Parser)]
#[command(name = "infobound", version, about = "Lower-bound certification and distributed sparse mean estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite (or `all`) and write its JSON report.
    Verify {
        /// assumptions, contraction, cut-paste, assouad, measure-change, binomial, reduction, or all
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials to run; each suite has its own default.
        #[arg(long)]
        budget: Option<u64>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure Monte Carlo risk over an experiment grid and write CSV.
    Risk {
        /// TOML file, or JSON when the extension is `.json`.
        #[arg(long)]
        config: PathBuf,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn verify(suite: &str, seed: u64, budget: Option<u64>, out: Option<&Path>) -> Result<bool> {
    let names: Vec<&str> = if suite == "all" { Suite::ALL.iter().map(|s| s.name()).collect() } else { vec![suite] };
    let reports = names
        .iter()
        .map(|name| run_verification_suite(name, seed, budget).with_context(|| format!("suite {name}")))
        .collect::<Result<Vec<SuiteReport>>>()?;
    for r in &reports {
        eprintln!(
            "{}: {} trials, {} failures, max slack {:.3e}, {:.2}s",
            r.suite, r.trials, r.failures, r.max_slack_used, r.elapsed
        );
        for line in &r.failure_details {
            eprintln!("  {line}");
        }
    }
    let mut w = sink(out)?;
    if let [one] = reports.as_slice() {
        serde_json::to_writer_pretty(&mut w, one)?;
    } else {
        serde_json::to_writer_pretty(&mut w, &reports)?;
    }
    writeln!(w)?;
    w.flush()?;
    Ok(reports.iter().all(SuiteReport::pass))
}

fn risk(config: &Path, out: Option<&Path>) -> Result<()> {
    let plan = ExperimentPlan::from_path(config).with_context(|| format!("reading {}", config.display()))?;
    let mut reports = Vec::with_capacity(plan.experiments.len());
    for cfg in &plan.experiments {
        let label = if cfg.name.is_empty() { format!("experiment {}", cfg.id) } else { cfg.name.clone() };
        let report = monte_carlo_risk(cfg).with_context(|| label.clone())?;
        match rate_fit(&report) {
            Ok(fit) => eprintln!("{label}: log-log slope {:.3} (r² {:.4})", fit.slope, fit.r_squared),
            Err(_) => eprintln!("{label}: {} grid points, no rate fit", report.points.len()),
        }
        for pt in &report.points {
            if let Some(sur) = &pt.surrogate {
                eprintln!("  n = {}: surrogate p = {} risk {:.5} ± {:.5}", pt.n, sur.p, sur.risk, sur.stderr);
            }
        }
        reports.push(report);
    }
    let mut w = sink(out)?;
    write_csv(&reports, &mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify { suite, seed, budget, out } => verify(suite, *seed, *budget, out.as_deref()),
        Command::Risk { config, out } => risk(config, out.as_deref()).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
