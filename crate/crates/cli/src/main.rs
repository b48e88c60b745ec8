//! Command-line front end for the instrument-recognition pipeline.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use icnn_core::pipeline::{
    analyze_filters, evaluate_checkpoint, extract_features, make_synthetic_corpus, prepare_dataset, run_baseline,
    train, ArchKind, BaselineKind, OutputLayout, RunConfig, SyntheticOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "icnn",
    version,
    about = "Raw-waveform CNN for multi-label instrument recognition"
)]
struct Cli {
    /// Run configuration (flat key = value file).
    #[arg(short, long, global = true, default_value = "run.conf")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the taxonomy, split tracks and write labelled clip manifests.
    PrepareDataset,
    /// Compute MFCC summary features for the train and test clips.
    ExtractFeatures,
    /// Train the CNN, checkpointing every epoch.
    Train {
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a checkpoint on a manifest.
    Evaluate {
        /// Defaults to checkpoints/best.ckpt in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to the test manifest in the output directory.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Train and score a shallow baseline: logistic, forest or majority.
    Baseline {
        #[arg(value_parser = parse_baseline)]
        kind: BaselineKind,
    },
    /// Spectra of the first-layer filters, sorted by dominant frequency.
    AnalyzeFilters {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to filters/ in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic corpus and a matching config to DIR.
    MakeSynthetic {
        dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        tracks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_baseline(s: &str) -> Result<BaselineKind, String> {
    s.parse().map_err(|e: icnn_core::pipeline::PipelineError| e.to_string())
}

fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::PrepareDataset => {
            let summary = prepare_dataset(&load_config(&cli.config)?)?;
            print!("{}", summary.to_text());
        }
        Command::ExtractFeatures => {
            let [train, test] = extract_features(&load_config(&cli.config)?)?;
            println!("train_clips={train}\ntest_clips={test}");
        }
        Command::Train { resume } => {
            let summary = train(&load_config(&cli.config)?, resume.as_deref())?;
            if let Some(best) = summary.best_epoch {
                println!("best_epoch={best}");
            }
        }
        Command::Evaluate { checkpoint, manifest } => {
            let cfg = load_config(&cli.config)?;
            let layout = OutputLayout::new(&cfg.output_dir);
            let checkpoint = checkpoint.unwrap_or_else(|| layout.best_checkpoint());
            let manifest = manifest.unwrap_or_else(|| layout.manifest("test"));
            let report = evaluate_checkpoint(&cfg, &checkpoint, &manifest)?;
            print!("{}", report.to_text("Audio + CNN", &[]));
        }
        Command::Baseline { kind } => {
            let report = run_baseline(&load_config(&cli.config)?, kind)?;
            print!("{}", report.to_text(kind.model_name(), &[]));
        }
        Command::AnalyzeFilters { checkpoint, out } => {
            let cfg = load_config(&cli.config)?;
            let layout = OutputLayout::new(&cfg.output_dir);
            let checkpoint = checkpoint.unwrap_or_else(|| layout.best_checkpoint());
            let out = out.unwrap_or_else(|| layout.filters_dir());
            let analysis = analyze_filters(&checkpoint, &out)?;
            println!(
                "filters={} fft_len={} out={}",
                analysis.spectra.len(),
                analysis.fft_len,
                out.display()
            );
        }
        Command::MakeSynthetic { dir, tracks, seed } => {
            let written = make_synthetic_corpus(
                &dir,
                &SyntheticOptions {
                    tracks,
                    seed,
                    ..SyntheticOptions::default()
                },
            )?;
            let mut cfg = RunConfig {
                audio_dir: PathBuf::from("audio"),
                activation_dir: PathBuf::from("activations"),
                output_dir: PathBuf::from("out"),
                min_songs: (tracks / 4).max(1),
                architecture: ArchKind::Reduced,
                ..RunConfig::default()
            };
            cfg.sgd.epochs = 2;
            cfg.forest.trees = 20;
            let conf = dir.join("run.conf");
            std::fs::write(&conf, cfg.to_text()).with_context(|| format!("writing {}", conf.display()))?;
            println!("tracks={} config={}", written.len(), conf.display());
        }
    }
    Ok(())
}
