use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kclosed::config::RunConfig;
use kclosed::runner;

#[derive(Parser)]
#[command(name = "kclosed", version, about = "Constructive K-closedness decompositions on periodic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the test corpus and write its fields.
    GenCorpus(Common),
    /// Decompose every corpus item and write fields, atoms and a summary.
    Decompose(Common),
    /// Run all checks and write the verdict.
    Verify(Common),
    /// Re-check a decomposition directory written by `decompose`.
    Report {
        /// Directory written by `decompose` (defaults to the configured output directory).
        dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of corpus items.
    #[arg(long)]
    items: Option<usize>,
    /// Points per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    p1: Option<f64>,
}

impl Common {
    /// File, then environment, then flags.
    fn load(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.apply_env()?;
        if let Some(seed) = self.seed {
            config.corpus.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(items) = self.items {
            config.corpus.items = items;
        }
        if let Some(points) = self.grid {
            config.grid.points = points;
        }
        if let Some(p1) = self.p1 {
            config.p1 = p1;
        }
        config.validate().context("invalid configuration")?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenCorpus(common) => {
            let config = common.load()?;
            let items = runner::gen_corpus(&config)?;
            for item in &items {
                println!("{:>4} {:<7} {:<17} {}", item.id, item.family, item.rule.name(), item.hash);
            }
            Ok(true)
        }
        Command::Decompose(common) => {
            let config = common.load()?;
            let rows = runner::run_decompose(&config)?;
            let worst = rows.iter().map(|r| r.reconstruction_error).fold(0.0, f64::max);
            println!(
                "decomposed {} items into {}; max reconstruction error {worst:.3e}",
                rows.len(),
                config.output_dir.display()
            );
            Ok(worst <= config.tolerances.reconstruction)
        }
        Command::Verify(common) => {
            let config = common.load()?;
            let verdict = runner::run_verify(&config)?;
            for check in &verdict.checks {
                println!("{:<28} {:?}", check.check_name, check.status);
            }
            for failure in &verdict.failures {
                println!("FAILED {failure}");
            }
            println!("verdict written to {}", config.output_dir.join("verify").display());
            Ok(verdict.passed)
        }
        Command::Report { dir, common } => {
            let config = common.load()?;
            let dir = dir.unwrap_or(config.output_dir.clone());
            let summary = runner::run_report(&dir, config.tolerances.reconstruction)?;
            println!(
                "{} items, max |w + v - f| / |f| = {:.3e}: {}",
                summary.items,
                summary.max_reconstruction_error,
                if summary.passed { "ok" } else { "FAILED" }
            );
            Ok(summary.passed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
