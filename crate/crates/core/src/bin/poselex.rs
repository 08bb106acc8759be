use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use poselex::config::PipelineConfig;
use poselex::pipeline::{self, CommandPaths};

#[derive(Parser)]
#[command(name = "poselex", about = "Learn pose lexicons and classify skeleton actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a planted lexicon
    Synth(CommonArgs),
    /// Train codebook, translation table and lexicon
    Train(CommonArgs),
    /// Cross-subject evaluation
    Eval(CommonArgs),
    /// Accuracy versus codebook size
    SweepK(CommonArgs),
    /// Classify instances with saved artifacts, optionally with novel instructions
    Classify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    instructions: Option<PathBuf>,
    #[arg(long)]
    novel: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<(PipelineConfig, CommandPaths)> {
        let cfg = PipelineConfig::load(&self.config)
            .with_context(|| format!("loading config {}", self.config.display()))?;
        let paths = CommandPaths {
            manifest: self.manifest.clone(),
            instructions: self.instructions.clone(),
            novel: self.novel.clone(),
            out: self.out.clone(),
        }
        .resolve(&cfg);
        Ok((cfg, paths))
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Synth(args) => {
            let (cfg, paths) = args.load()?;
            pipeline::cmd_synth(&cfg, &paths)?;
        }
        Command::Train(args) => {
            let (cfg, paths) = args.load()?;
            let model = pipeline::cmd_train(&cfg, &paths)?;
            for e in &model.lexicon.entries {
                println!("{} -> {} ({:.4})", e.semantic_pose, e.visual_pose_id, e.probability);
            }
        }
        Command::Eval(args) => {
            let (cfg, paths) = args.load()?;
            let report = pipeline::cmd_eval(&cfg, &paths)?;
            println!("accuracy {:.4} over {} test instances", report.accuracy, report.test_instances);
            if let Some(r) = report.lexicon_recovery {
                println!("lexicon recovery {r:.4}");
            }
        }
        Command::SweepK(args) => {
            let (cfg, paths) = args.load()?;
            print!("{}", pipeline::sweep_csv(&pipeline::cmd_sweep_k(&cfg, &paths)?));
        }
        Command::Classify(args) => {
            let (cfg, paths) = args.load()?;
            let reports = pipeline::cmd_classify(&cfg, &paths)?;
            println!("classified {} instances", reports.len());
        }
    }
    Ok(())
}
