use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use otsurf_cli::commands;
use otsurf_cli::ExperimentConfig;

#[derive(Parser)]
#[command(name = "otsurf", version, about = "Optimal transport on convex boundaries: solvers and checkers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Body metrics and interior-cone radii.
    Geometry(Common),
    /// Solve one transport instance and dump measures, plan and potentials.
    Solve(Common),
    /// Run every checker once; exits with 1 if a hard checker fails.
    Verify(Common),
    /// Run the scenario named in the config.
    Experiment(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "OTSURF_THREADS")]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
        if let Some(t) = self.threads {
            rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("thread pool")?;
        }
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .ok_or_else(|| anyhow!("no output directory: pass --out or set `output` in the config"))?;
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Geometry(c) => {
            let (cfg, out) = c.load()?;
            let p = commands::geometry(&cfg, &out)?;
            println!("wrote {}", p.display());
            Ok(true)
        }
        Command::Solve(c) => {
            let (cfg, out) = c.load()?;
            let p = commands::solve_one(&cfg, &out)?;
            println!("wrote {}", p.display());
            Ok(true)
        }
        Command::Verify(c) => {
            let (cfg, out) = c.load()?;
            let rec = commands::verify(&cfg, &out)?;
            for r in rec.all_reports() {
                let tag = if r.pass {
                    "pass"
                } else if otsurf_cli::checks::is_hard(r) {
                    "FAIL"
                } else {
                    "soft-fail"
                };
                println!("{tag:>9}  {:<22} {:.3e} (tol {:.1e})", r.checker, r.worst_violation, r.tolerance);
            }
            Ok(rec.passed())
        }
        Command::Experiment(c) => {
            let (cfg, out) = c.load()?;
            let rec = commands::experiment(&cfg, &out)?;
            println!("{} points in {:.1}s, wrote {}", rec.results.len(), rec.timing.total_seconds, out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
