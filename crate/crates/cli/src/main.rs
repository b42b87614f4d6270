//! `citefuse`: staged citation-recommendation runs over a work directory.

mod settings;
mod stages;
mod workdir;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::stages::Ctx;
use crate::workdir::{Stage, WorkDir};

/// Any config key can also be given as `--section.key value`, e.g.
/// `--graph.p 0.5` or `--fusion.method cca`.
#[derive(Parser)]
#[command(
    name = "citefuse",
    version,
    about = "Multi-view citation recommendation"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-threaded training for bit-identical reruns.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
    /// Line-delimited JSON corpus.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Config override, `section.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, prune and split the corpus; write ground truth and statistics.
    Prepare,
    /// Fit the text model and embed train and test papers.
    EmbedText,
    /// Walks and skip-gram over the training citation graph.
    EmbedGraph,
    /// Fit CCA or DCCA on training papers.
    TrainFusion,
    /// Estimate test-paper node vectors and fuse both partitions.
    Infer,
    /// Top-k training papers for every test paper.
    Rank,
    /// Precision, recall and MAP at each cutoff.
    Evaluate,
    /// Every stage in order.
    Pipeline {
        /// Skip stages whose artifacts match the configuration.
        #[arg(long)]
        resume: bool,
    },
    /// Node-only retrieval over the 5x5 node2vec (p, q) grid.
    GridPq,
    /// Linear-combination fusion over the alpha grid.
    GridAlpha,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

fn run(cli: Cli) -> Result<()> {
    let mut overrides = Vec::new();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if cli.deterministic {
        overrides.push("deterministic=true".into());
    }
    if let Some(dir) = &cli.work_dir {
        overrides.push(format!("paths.work_dir={}", toml_string(dir)));
    }
    if let Some(corpus) = &cli.corpus {
        overrides.push(format!("paths.corpus={}", toml_string(corpus)));
    }
    overrides.extend(cli.set);
    let cfg = settings::load(cli.config.as_deref(), &overrides)?;

    if let Command::PrintConfig = cli.command {
        print!("{}", settings::to_toml(&cfg)?);
        return Ok(());
    }
    let ctx = Ctx {
        cfg: &cfg,
        wd: WorkDir::new(&cfg.paths.work_dir)?,
    };
    match cli.command {
        Command::Prepare => stages::run(&ctx, Stage::Prepare),
        Command::EmbedText => stages::run(&ctx, Stage::EmbedText),
        Command::EmbedGraph => stages::run(&ctx, Stage::EmbedGraph),
        Command::TrainFusion => stages::run(&ctx, Stage::TrainFusion),
        Command::Infer => stages::run(&ctx, Stage::Infer),
        Command::Rank => stages::run(&ctx, Stage::Rank),
        Command::Evaluate => stages::run(&ctx, Stage::Evaluate),
        Command::Pipeline { resume } => stages::pipeline(&ctx, resume),
        Command::GridPq => stages::grid_pq(&ctx),
        Command::GridAlpha => stages::grid_alpha(&ctx),
        Command::PrintConfig => unreachable!(),
    }
}

fn toml_string(path: &std::path::Path) -> String {
    toml::Value::String(path.display().to_string()).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = settings::expand_dotted_flags(std::env::args());
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
