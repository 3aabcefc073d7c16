//! `mstate` — reserves, second moments and conditional variances in
//! multi-state life-insurance models without a Markov assumption.
//!
//! The pipeline stages are cumulative (`all` ≡ `check`):
//!
//! ```text
//! mstate simulate --config two_state --out out/        paths + run metadata
//! mstate estimate --config cfg.json --out out/         moment surfaces and rates
//! mstate solve    --config cfg.json --out out/         Kolmogorov surfaces + residuals
//! mstate value    --config cfg.json --out out/         report.csv
//! mstate check    --config cfg.json --out out/         checks.json, oracle columns
//! mstate all      --config cfg.json --out out/         everything
//! ```
//!
//! `--config` takes a JSON file or the name of a shipped example
//! (`two_state`, `disability`, `free_policy`). Exit code 0 on success, 1 on
//! error, 2 when the run finished but an oracle or consistency check failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mstate::pipeline::{self, PipelineOptions, Stage};
use mstate::{example_config, example_names, RunConfig};

#[derive(Parser)]
#[command(name = "mstate", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured ensemble and write run metadata.
    Simulate(RunArgs),
    /// ... and estimate conditional moment surfaces and transition rates.
    Estimate(RunArgs),
    /// ... and solve the forward equations, checking self-consistency.
    Solve(RunArgs),
    /// ... and value every payment specification (writes report.csv).
    Value(RunArgs),
    /// ... and compare all values against the Monte Carlo oracle.
    Check(RunArgs),
    /// Run the full pipeline (same as `check`).
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration JSON file, or the name of a shipped example.
    #[arg(long)]
    config: String,
    /// Output directory for all artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for simulation (results do not depend on this).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Force fully serial execution; artifacts are byte-reproducible.
    #[arg(long)]
    strict_determinism: bool,
    /// Also write the dense two-dimensional surface and rate matrices.
    #[arg(long)]
    dump_surfaces: bool,
    /// Also write the simulated paths in run-length form.
    #[arg(long)]
    dump_paths: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> mstate::Result<ExitCode> {
    let (args, stage) = match &cli.command {
        Command::Simulate(a) => (a, Stage::Simulate),
        Command::Estimate(a) => (a, Stage::Estimate),
        Command::Solve(a) => (a, Stage::Solve),
        Command::Value(a) => (a, Stage::Value),
        Command::Check(a) | Command::All(a) => (a, Stage::Check),
    };
    let config = load_config(&args.config)?;
    let resolved = config.resolve()?;
    let opts = PipelineOptions {
        out_dir: args.out.clone(),
        threads: args.threads,
        strict_determinism: args.strict_determinism,
        dump_surfaces: args.dump_surfaces,
        dump_paths: args.dump_paths,
    };
    let outcome = pipeline::run(&resolved, stage, &opts)?;

    println!(
        "{}: {} paths, {} conditioning cell(s)",
        resolved.name,
        outcome.n_paths,
        outcome.cells.len()
    );
    for r in &outcome.reports {
        match (r.s_plus, r.variance) {
            (Some(s), Some(v)) => println!(
                "  [{}] {}: V+ = {}  V- = {}  S+ = {}  Var = {}",
                r.label, r.spec, r.v_plus, r.v_minus, s, v
            ),
            _ => println!(
                "  [{}] {}: V+ = {}  V- = {}",
                r.label, r.spec, r.v_plus, r.v_minus
            ),
        }
    }
    if let Some(checks) = &outcome.checks {
        for cell in &checks.cells {
            for v in &cell.valuations {
                let worst = v
                    .v_plus
                    .z
                    .abs()
                    .max(v.v_minus.z.abs())
                    .max(v.s_plus.map_or(0.0, |c| c.z.abs()));
                println!(
                    "  check [{}] {}: {} (max |z| = {})",
                    cell.label,
                    v.spec,
                    if v.pass { "ok" } else { "FAILED" },
                    worst
                );
            }
            if !cell.solver_consistent {
                println!("  check [{}] solver: FAILED (residuals too large)", cell.label);
            }
        }
        if !checks.all_pass {
            println!("checks: FAILED");
            return Ok(ExitCode::from(2));
        }
        println!("checks: all passed");
    }
    Ok(ExitCode::SUCCESS)
}

/// A `--config` argument names either a JSON file or a shipped example.
fn load_config(arg: &str) -> mstate::Result<RunConfig> {
    let path = PathBuf::from(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(&path)?;
        return RunConfig::from_json(&text);
    }
    example_config(arg).map_err(|_| mstate::Error::InvalidConfig {
        field: "config".into(),
        message: format!(
            "`{arg}` is neither a readable file nor a shipped example ({})",
            example_names().join(", ")
        ),
    })
}
