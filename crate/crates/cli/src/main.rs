//! `dnmap`: runs the experiment pipelines from a TOML configuration.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or numerical
//! error, 2 on a configuration, profile or output error.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod summary;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::{Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dnmap", version, about = "Experiments on the semiclassical elastic DN-map symbol")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized sweeps (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Factorization residual, oracle agreement and spectrum separation on a random sweep.
    FactorCheck,
    /// Boundary parameters and depth derivatives from probes at the configured depths.
    Reconstruct,
    /// Forward-Euler Riccati propagation of the modified DN map.
    LayerStrip,
    /// Time-domain solve, finite Laplace transform and comparison with the elliptic map.
    Bridge,
    /// Incoming/outgoing splitting and decay of the incoming constituent.
    Split,
    /// Every per-draw invariant over the random sweep.
    Sweep,
    /// The command named in the configuration file.
    Run,
}

impl Sub {
    fn command(self) -> Option<Command> {
        Some(match self {
            Sub::FactorCheck => Command::FactorCheck,
            Sub::Reconstruct => Command::Reconstruct,
            Sub::LayerStrip => Command::LayerStrip,
            Sub::Bridge => Command::Bridge,
            Sub::Split => Command::Split,
            Sub::Sweep => Command::Sweep,
            Sub::Run => return None,
        })
    }
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("dnmap: configuration error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => return config_error(e),
        },
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let command = match (cli.command.command(), cfg.command) {
        (Some(c), Some(named)) if c != named => {
            return config_error(format!("subcommand {} does not match config command {}", c.name(), named.name()))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return config_error("`run` requires `command` in the configuration"),
    };
    if let Err(e) = cfg.validate() {
        return config_error(e);
    }
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("dnmap-out"));
    if let Err(e) = std::fs::create_dir_all(&out) {
        return config_error(format!("cannot create {}: {e}", out.display()));
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };

    match pool.install(|| commands::run(command, &cfg, &out)) {
        Ok(summary) => {
            for (key, c) in &summary.checks {
                let rule = match c.rule {
                    summary::Rule::AtMost => "<=",
                    summary::Rule::AtLeast => ">=",
                };
                println!("{} {key} = {:e} ({rule} {:e})", if c.pass { "PASS" } else { "FAIL" }, c.value, c.limit);
            }
            println!(
                "{}: {} (summary in {})",
                command.name(),
                if summary.passed { "passed" } else { "failed" },
                out.join("summary.json").display()
            );
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Config(e)) => config_error(e),
        Err(Failure::Numeric(e)) => {
            eprintln!("dnmap: numerical failure: {e}");
            ExitCode::from(1)
        }
    }
}
