use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use egonet::graph::{dataset_stats, load_ego_dataset};
use egonet::{run_pipeline, DatasetKind, PipelineConfig, Stage};

/// Circle prediction from global and local ego-network embeddings.
#[derive(Parser, Debug)]
#[command(name = "egonet", version)]
struct Cli {
    /// TOML config; defaults apply to every key it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for stage artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Force single-threaded, reproducible embedding training.
    #[arg(long, global = true)]
    deterministic: bool,
    /// SNAP ego-nets directory.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Dataset kind: facebook, gplus or twitter.
    #[arg(long, global = true)]
    kind: Option<DatasetKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print graph statistics of the dataset.
    Stats,
    /// Generate global random walks and ego-walks.
    Walks,
    /// Train global skip-gram embeddings.
    TrainGlobal,
    /// Train local PV-DM ego embeddings.
    TrainLocal,
    /// Build instance matrices for every configured variant.
    Features,
    /// Train one classifier per fold, variant and output mode.
    TrainClf,
    /// Score held-out folds and write the report.
    Evaluate,
    /// Run one stage or the whole chain.
    Pipeline {
        #[arg(long, default_value = "all")]
        stage: Stage,
        /// Print the effective config as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir.clone_from(o);
    }
    if cli.deterministic {
        cfg.deterministic = true;
    }
    if let Some(d) = &cli.data {
        cfg.data_dir.clone_from(d);
    }
    if let Some(k) = cli.kind {
        cfg.kind = k;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli)?;
    let stage = match cli.command {
        Command::Stats => {
            let ds = load_ego_dataset(&cfg.data_dir, cfg.kind)
                .with_context(|| format!("loading {}", cfg.data_dir.display()))?;
            println!("{}", dataset_stats(&ds));
            return Ok(());
        }
        Command::Pipeline { print_config: true, .. } => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
        Command::Walks => Stage::Walks,
        Command::TrainGlobal => Stage::Glo,
        Command::TrainLocal => Stage::Loc,
        Command::Features => Stage::Features,
        Command::TrainClf => Stage::Train,
        Command::Evaluate => Stage::Eval,
        Command::Pipeline { stage, .. } => stage,
    };
    run_pipeline(&cfg, stage).with_context(|| format!("stage `{}` failed", stage.name()))?;
    if matches!(stage, Stage::Eval | Stage::All) {
        let report = cfg.stage_dir(Stage::Eval).join("report.txt");
        print!("{}", std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
