use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand};
use rfiot_cli::commands::{load_config, run, Command};
use rfiot_cli::config::Engine;

#[derive(Parser)]
#[command(name = "rfiot", version, about = "Coverage and throughput of RF-powered cellular IoT")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Run configuration (default: the shipped reference configuration).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV; the manifest goes next to it as `<name>.manifest.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Engines used by `sweep`.
    #[arg(long, global = true, value_parser = parse_engine)]
    engine: Option<Engine>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    overwrite: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Coverage and throughput from the analytic engine.
    Analytic,
    /// Coverage and throughput from the simulator.
    Simulate,
    /// Both engines with per-event agreement flags; exits with 2 on a failure.
    Compare,
    /// Runs the configured sweep with the selected engines.
    Sweep,
    /// Throughput-optimal slot partition and the evaluated grid.
    Optimize,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse()
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("RFIOT_THREADS") {
        let n: usize = v.parse().with_context(|| format!("RFIOT_THREADS = `{v}` is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }

    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(n) = cli.trials {
        cfg.mc.n_trials = n;
    }
    if let Some(e) = cli.engine {
        cfg.engine = e;
    }
    let problems = cfg.problems();
    if !problems.is_empty() {
        bail!("invalid settings: {}", problems.join("; "));
    }

    let command = match cli.command {
        Cmd::Analytic => Command::Analytic,
        Cmd::Simulate => Command::Simulate,
        Cmd::Compare => Command::Compare,
        Cmd::Sweep => Command::Sweep,
        Cmd::Optimize => Command::Optimize,
    };
    let report = run(command, &cfg, cli.overwrite)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for p in &report.outputs {
        println!("wrote {}", p.display());
    }
    Ok(match report.compare_passed {
        Some(false) => {
            eprintln!("agreement check failed");
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    })
}
