//! Pipeline driver. Every subcommand maps to one stage over a shared
//! artifact directory; `run-all` executes the full workflow, skipping
//! stages whose outputs already exist.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use molforge::pipeline::{
    clear_stage, run_ablation, run_all, stage, Artifacts, RunConfig, Stage,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "molforge",
    about = "Molecular design pipeline: curation, surrogate training, generation, screening, and reports",
    version
)]
struct Cli {
    /// Configuration file (key = value lines; profile desk or paper).
    #[arg(short, long, global = true, default_value = "molforge.toml")]
    config: PathBuf,

    /// Artifact directory override (defaults to the configured path).
    #[arg(short, long, global = true)]
    artifacts: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curate the raw dataset: parse, filter, convert units, merge duplicates.
    Ingest(StageArgs),
    /// Train the potency surrogate network.
    TrainSurrogate(StageArgs),
    /// Train every readout variant and emit the comparison table.
    AblateReadouts,
    /// Build the substructure vocabulary and train the tree autoencoder.
    TrainJtvae(StageArgs),
    /// Optimize latent codes against the configured objective.
    OptimizeBo(StageArgs),
    /// Train the graph-edit agent against the configured objective.
    TrainDqn(StageArgs),
    /// Score the merged candidate pools.
    Score(StageArgs),
    /// Keep candidates whose predicted potency clears the threshold.
    Screen(StageArgs),
    /// Train the interaction classifier and flag screened candidates.
    ValidateDtba(StageArgs),
    /// Emit the ranked tables, scatter data, and distribution reports.
    Report(StageArgs),
    /// Run every stage in order, resuming from existing outputs.
    RunAll,
}

#[derive(clap::Args)]
struct StageArgs {
    /// Delete this stage's outputs first so it reruns.
    #[arg(long)]
    force: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli.config)?;
    let dir = cli.artifacts.clone().unwrap_or_else(|| PathBuf::from(&cfg.artifacts));
    let artifacts = Artifacts::new(&dir).with_context(|| format!("creating {dir:?}"))?;

    let run_stage = |which: Stage, args: &StageArgs| -> Result<()> {
        if args.force {
            clear_stage(&artifacts, which)?;
        }
        if artifacts.stage_done(which) {
            println!("{}: outputs exist, skipping (use --force to rerun)", which.name());
            return Ok(());
        }
        stage(which, &cfg, &artifacts).with_context(|| which.name())?;
        println!("{}: done", which.name());
        Ok(())
    };

    match &cli.command {
        Command::Ingest(a) => run_stage(Stage::Ingest, a)?,
        Command::TrainSurrogate(a) => run_stage(Stage::TrainSurrogate, a)?,
        Command::AblateReadouts => {
            run_ablation(&cfg, &artifacts).context("ablate-readouts")?;
            println!("ablate-readouts: wrote {}", dir.join("ablation.csv").display());
        }
        Command::TrainJtvae(a) => run_stage(Stage::TrainJtvae, a)?,
        Command::OptimizeBo(a) => run_stage(Stage::OptimizeBo, a)?,
        Command::TrainDqn(a) => run_stage(Stage::TrainDqn, a)?,
        Command::Score(a) => run_stage(Stage::Score, a)?,
        Command::Screen(a) => run_stage(Stage::Screen, a)?,
        Command::ValidateDtba(a) => run_stage(Stage::ValidateDtba, a)?,
        Command::Report(a) => run_stage(Stage::Report, a)?,
        Command::RunAll => {
            for (name, ran) in run_all(&cfg, &artifacts)? {
                println!("{name}: {}", if ran { "done" } else { "skipped (outputs exist)" });
            }
        }
    }
    Ok(())
}

fn load_config(path: &PathBuf) -> Result<RunConfig> {
    if path.exists() {
        RunConfig::load(path).with_context(|| format!("loading {path:?}"))
    } else if path == &PathBuf::from("molforge.toml") {
        // no file: fall back to the desk profile so the tool works out of
        // the box; MOLFORGE_SEED still applies
        RunConfig::from_text("profile = desk\n").map_err(Into::into)
    } else {
        anyhow::bail!("config file {path:?} does not exist")
    }
}
