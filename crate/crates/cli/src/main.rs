//! `preytaxis-lab`: equilibria, dispersion relations, bifurcation curves,
//! simulations and diffusivity sweeps for the predator-prey taxis model.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Utc;
use clap::{Parser, ValueEnum};
use serde_json::json;

use config::RunConfig;
use error::CliError;
use output::{write_manifest_atomic, RunDir};

/// Output directory used when neither `--out` nor `[output] directory` is given.
const DEFAULT_OUT_DIR: &str = "preytaxis-out";

/// Generator behind the initial perturbation.
const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Equilibria,
    Dispersion,
    Bifurcation,
    Simulate,
    Sweep,
}

impl Command {
    fn as_str(self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::Dispersion => "dispersion",
            Command::Bifurcation => "bifurcation",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "preytaxis-lab", version, about)]
struct Args {
    /// Analysis to run.
    #[arg(value_enum)]
    command: Command,
    /// INI-style configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Perturbation seed; overrides `[solver] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Also simulate and classify every sweep point.
    #[arg(long)]
    simulate: bool,
}

fn run(args: &Args, cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    match args.command {
        Command::Equilibria => commands::equilibria(cfg, dir),
        Command::Dispersion => commands::dispersion_cmd(cfg, dir),
        Command::Bifurcation => commands::bifurcation(cfg, dir),
        Command::Simulate => commands::simulate(cfg, dir),
        Command::Sweep => commands::sweep(cfg, dir, args.simulate),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let started = Utc::now();

    // Configuration problems exit before anything touches the filesystem.
    let parsed = RunConfig::load(&args.config).and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.solver.seed = seed;
        }
        if args.command == Command::Sweep {
            commands::check_sweep(&cfg)?;
        }
        Ok(cfg)
    });
    let cfg = match parsed {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };

    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let mut dir = RunDir::new(out);
    let result = run(&args, &cfg, &mut dir);
    let (status, code, message) = match &result {
        Ok(()) => ("ok", 0u8, None),
        Err(e) => (e.status(), e.exit_code(), Some(e.to_string())),
    };
    if let Some(m) = &message {
        eprintln!("error: {m}");
    }

    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": args.command.as_str(),
        "config_path": args.config.display().to_string(),
        "config": cfg.raw,
        "prng": {"name": PRNG_NAME, "seed": cfg.solver.seed},
        "started": started.to_rfc3339(),
        "finished": Utc::now().to_rfc3339(),
        "files": dir.files,
        "status": status,
        "exit_code": code,
        "error": message,
        "results": dir.results,
    });
    if let Err(e) = write_manifest_atomic(&dir.path, &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
