use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use drl::pipeline::{cmd_perturb, cmd_rank, cmd_score, cmd_train, RunConfig, SpecRow};
use drl::{DrlError, Result};

#[derive(Parser)]
#[command(name = "drl", version, about = "Score document sets for readiness against a question")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `run.output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `run.n_runs`.
    #[arg(long)]
    runs: Option<usize>,
    /// Overrides `run.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.run.master_seed = seed;
        }
        if let Some(dir) = &self.output_dir {
            cfg.run.output_dir = dir.clone();
        }
        if let Some(n) = self.runs {
            cfg.run.n_runs = n;
        }
        if let Some(w) = self.workers {
            cfg.run.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess the corpus, train one topic model and save it.
    Train(Common),
    /// Score every document set against the query over seeded runs.
    Score {
        #[command(flatten)]
        common: Common,
        /// Use this model for every run instead of training.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Train once and reuse the model for every run.
        #[arg(long)]
        reuse_model: bool,
    },
    /// Measure how query perturbations move the projection and relevance.
    Perturb {
        #[command(flatten)]
        common: Common,
        /// JSON list of perturbations.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Merge score reports into one ranking with equivalence classes.
    Rank {
        /// `report.json` files written by `score`.
        #[arg(required = true)]
        score_files: Vec<PathBuf>,
        /// Equivalence tolerance; defaults to `run.delta` of --config, else 0.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Unused; accepted for symmetry with the other commands.
        #[arg(long)]
        seed: Option<u64>,
        /// Write ranking.json and ranking.csv here.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let summary = cmd_train(&common.load()?)?;
            println!("{summary}");
        }
        Command::Score {
            common,
            model,
            reuse_model,
        } => {
            let mut cfg = common.load()?;
            cfg.run.reuse_model |= reuse_model;
            let report = cmd_score(&cfg, model.as_deref())?;
            println!("{:>4}  {:<20} {:>12} {:>12} {:>12}", "rank", "set", "relevance", "disparity", "coherence");
            for (i, s) in report.ranking.iter().enumerate() {
                println!(
                    "{:>4}  {:<20} {:>12.6} {:>12.6} {:>12.4}",
                    i + 1,
                    s.set_key,
                    s.relevance,
                    s.disparity,
                    s.coherence.value()
                );
            }
            for u in &report.unscored_sets {
                println!("      {:<20} not scored: {}", u.set_key, u.reason);
            }
            println!("written to {}", cfg.run.output_dir.display());
        }
        Command::Perturb {
            common,
            spec,
            model,
        } => {
            let cfg = common.load()?;
            let report = cmd_perturb(&cfg, &spec, model.as_deref())?;
            for row in &report.rows {
                match row {
                    SpecRow::Ok(r) => println!(
                        "{:<10} s1 = {:.4} (median {:.4})",
                        r.label, r.s1, r.s1_median
                    ),
                    SpecRow::Error(f) => println!("{:<10} error: {}", f.label, f.error),
                }
            }
            println!("written to {}", cfg.run.output_dir.display());
        }
        Command::Rank {
            score_files,
            delta,
            config,
            seed: _,
            output_dir,
        } => {
            let delta = match (delta, config.as_deref()) {
                (Some(d), _) => d,
                (None, Some(path)) => RunConfig::load(path)?.run.delta,
                (None, None) => 0.0,
            };
            let report = cmd_rank(&score_files, delta, output_dir.as_deref().map(Path::new))?;
            for r in &report.ranking {
                println!(
                    "{:>4}  class {:<3} {:<24} {:.6}",
                    r.rank, r.class, r.score.set_key, r.score.relevance
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &DrlError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
