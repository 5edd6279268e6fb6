//! `latreap`: named experiments over learning-augmented treaps and B-trees.
//!
//! Every subcommand writes `summary.json` and `trials.csv` into the output
//! directory, plus `steps.csv` when a per-access trace is requested. The
//! exit code is 1 when any check fails and 2 on usage or config errors.

mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use config::RawConfig;
use experiments::{Ctx, Report};

#[derive(Parser, Debug)]
#[command(name = "latreap", version, about = "Experiments with learning-augmented treaps and B-trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Key-value config file (`key = value` per line).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "latreap-out")]
    out: PathBuf,
    /// Base seed; trial t uses seed + t.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads (0 picks the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Composite-priority treap against the optimal static BST and the entropy bound.
    StaticOpt,
    /// Cost overhead of perturbed predictions under each error measure.
    Robustness,
    /// Raw-score and single-log priorities on their adversarial distributions.
    Counterexamples,
    /// Working-set oracles on the treap and the rank forest.
    WorkingSet,
    /// Interval-set priorities on B-tree structures, X1 vs X2 and an MAE sweep.
    IntervalSet,
    /// Tier forest against the deterministic forest in block I/O.
    EmCompare,
    /// Every structural invariant on random instances.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::StaticOpt => "static-opt",
            Command::Robustness => "robustness",
            Command::Counterexamples => "counterexamples",
            Command::WorkingSet => "working-set",
            Command::IntervalSet => "interval-set",
            Command::EmCompare => "em-compare",
            Command::Validate => "validate",
        }
    }

    fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::StaticOpt => experiments::STATIC_OPT,
            Command::Robustness => experiments::ROBUSTNESS,
            Command::Counterexamples => experiments::COUNTEREXAMPLES,
            Command::WorkingSet => experiments::WORKING_SET,
            Command::IntervalSet => experiments::INTERVAL_SET,
            Command::EmCompare => experiments::EM_COMPARE,
            Command::Validate => experiments::VALIDATE,
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::read(path)?,
        None => RawConfig::default(),
    };
    if let Some(s) = cli.seed {
        raw.set("seed", s.to_string());
    }
    if let Some(t) = cli.trials {
        raw.set("trials", t.to_string());
    }
    if let Some(t) = cli.threads {
        raw.set("threads", t.to_string());
    }
    let params = raw.resolve(cli.command.defaults())?;
    let ctx = Ctx::new(params.get("seed")?, params.get("trials")?, params.get("threads")?)?;

    let report: Report = match cli.command {
        Command::StaticOpt => experiments::static_opt(&params, &ctx)?,
        Command::Robustness => experiments::robustness(&params, &ctx)?,
        Command::Counterexamples => experiments::counterexamples(&params, &ctx)?,
        Command::WorkingSet => experiments::working_set(&params, &ctx)?,
        Command::IntervalSet => experiments::interval_set(&params, &ctx)?,
        Command::EmCompare => experiments::em_compare(&params, &ctx)?,
        Command::Validate => experiments::validate(&params, &ctx)?,
    };

    let pass = report.checks.iter().all(|c| c.pass);
    let checks: Vec<_> =
        report.checks.iter().map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail })).collect();
    let summary = json!({
        "subcommand": cli.command.name(),
        "config": params.to_json(),
        "results": report.results,
        "checks": checks,
        "pass": pass,
    });

    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let write = |name: &str, body: &str| {
        let path = cli.out.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write("summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    write("trials.csv", &report.trials_csv)?;
    if let Some(steps) = &report.steps_csv {
        write("steps.csv", steps)?;
    }

    for c in &report.checks {
        if !c.pass {
            eprintln!("check failed: {} ({})", c.name, c.detail);
        }
    }
    println!(
        "{}: {}/{} checks passed, output in {}",
        cli.command.name(),
        report.checks.iter().filter(|c| c.pass).count(),
        report.checks.len(),
        cli.out.display()
    );
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
