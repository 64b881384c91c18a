use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedadmm::admm::{rho_threshold, Theorem1Constants};
use fedadmm::baselines::StrategyKind;
use fedadmm::sim::config::parse_override;
use fedadmm::sim::{load_run, run_experiment, ExperimentConfig, World};
use fedadmm::summary::{common_target, summarize};
use fedadmm::{Error, Result};

#[derive(Parser)]
#[command(name = "fedadmm", version, about = "Federated consensus optimization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (`key = value` lines).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set strategy.rho=0.01`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let overrides = self.overrides.iter().map(|o| parse_override(o)).collect::<Result<Vec<_>>>()?;
        match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides),
            None => ExperimentConfig::from_pairs(overrides),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment once per seed, one run directory each.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated seeds; defaults to the config's `seed`.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Root directory for run directories.
        #[arg(long, env = "FEDADMM_OUT", default_value = "runs")]
        out: PathBuf,
    },
    /// Print client partition statistics for a config.
    Partition {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also print every client's sample count.
        #[arg(long)]
        sizes: bool,
    },
    /// Compare rounds-to-target across run directories.
    Summarize {
        /// Run directories containing rounds.jsonl and config.echo.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Target accuracy; defaults to the runs' recorded target_accuracy.
        #[arg(long)]
        target: Option<f64>,
        /// Strategy the speedup column is relative to.
        #[arg(long, default_value = "fedsgd")]
        reference: StrategyKind,
        /// Write the CSV table here (`-` for stdout).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Validate convergence-analysis hyperparameters and print c1, c2, c3.
    Check {
        #[command(flatten)]
        config: ConfigArgs,
        /// Penalty ρ; defaults to the config's strategy.rho.
        #[arg(long)]
        rho: Option<f64>,
        /// Smoothness constant L; computed from the config's data when absent.
        #[arg(long)]
        lipschitz: Option<f64>,
        /// Minimum participation probability; defaults to the config's.
        #[arg(long)]
        p_min: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let base = config.load()?;
            let seeds = if seeds.is_empty() { vec![base.seed] } else { seeds };
            for seed in seeds {
                let cfg = base.with_overrides(&[("seed", seed.to_string())])?;
                let artifact = run_experiment(&cfg, &out)?;
                let last = artifact.records.last().expect("at least one round");
                let acc = last.test_acc.map_or("-".to_string(), |a| format!("{a:.4}"));
                let reached = cfg
                    .target_accuracy
                    .map(|t| format!(" rounds_to_target={}", artifact.rounds_to_target(t)))
                    .unwrap_or_default();
                println!(
                    "{} rounds={} train_loss={:.6} test_acc={acc}{reached}",
                    artifact.dir.display(),
                    last.round,
                    last.train_loss
                );
            }
            Ok(())
        }
        Command::Partition { config, sizes } => {
            let cfg = config.load()?;
            let world = World::new(&cfg)?;
            let part = world
                .partition()
                .ok_or_else(|| Error::Config("quadratic ensembles have no sample partition".into()))?;
            let stats = part.stats();
            println!("scheme={:?} clients={}", part.scheme(), part.clients());
            println!(
                "mean={:.4} stdev={:.4} min={} max={}",
                stats.mean, stats.stdev, stats.min, stats.max
            );
            if sizes {
                for (i, n) in part.sizes().iter().enumerate() {
                    println!("{i} {n}");
                }
            }
            Ok(())
        }
        Command::Summarize { runs, target, reference, csv } => {
            let artifacts = runs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>>>()?;
            let target = match target {
                Some(t) => t,
                None => common_target(&artifacts)?,
            };
            let summary = summarize(&artifacts, target, reference);
            print!("{}", summary.table());
            match csv.as_deref() {
                Some(p) if p == Path::new("-") => print!("{}", summary.csv()),
                Some(p) => fs::write(p, summary.csv()).map_err(|e| Error::Io {
                    path: p.to_path_buf(),
                    source: e,
                })?,
                None => {}
            }
            Ok(())
        }
        Command::Check { config, rho, lipschitz, p_min } => {
            let cfg = config.load()?;
            let rho = rho.unwrap_or(cfg.rho);
            let lipschitz = match lipschitz {
                Some(l) => l,
                None => {
                    let probe = cfg.with_overrides(&[("verify.enabled", "true")])?;
                    let diag = World::new(&probe)?.diagnostics().expect("verify mode");
                    if !diag.certified {
                        eprintln!("warning: L = {} is a configured estimate, not a proven bound", diag.lipschitz);
                    }
                    diag.lipschitz
                }
            };
            let p_min = p_min.unwrap_or_else(|| cfg.p_min());
            println!("L={lipschitz} rho={rho} p_min={p_min} threshold=(1+√5)L={:.6}", rho_threshold(lipschitz));
            let c = Theorem1Constants::new(lipschitz, rho, p_min, 0.0)?;
            println!("c1={}\nc2={}\nc3={}", c.c1, c.c2, c.c3);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
