mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kforge::export::Arch;
use kforge::pipeline::{Method, SamplingKind};

/// Simulated dynamic multi-coil MR data from natural videos: undersampling,
/// reconstruction, evaluation and dataset export.
#[derive(Debug, Parser)]
#[command(name = "kforge", version)]
pub struct Cli {
    /// Pipeline config (TOML). Defaults to ./pipeline.cfg when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset seed; overrides the config.
    #[arg(long, global = true, env = "KFORGE_SEED")]
    pub seed: Option<u64>,
    /// Output root; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads over videos.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Write PNG frames and y-t profiles of reconstructions.
    #[arg(long, global = true)]
    pub emit_figures: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write procedural test videos as directories of PNG frames.
    Toy {
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, default_value_t = 24)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Simulate fully sampled, coil-compressed k-space for every video.
    Simulate {
        /// Directory with one sub-directory of frames per video.
        #[arg(long)]
        videos: Option<PathBuf>,
    },
    /// Write the sampling pattern of one scheme.
    Traj {
        #[arg(long)]
        sampling: SamplingKind,
        #[arg(long)]
        frames: Option<usize>,
        /// Video whose random stream draws the Cartesian mask.
        #[arg(long, default_value = "traj")]
        video_id: String,
    },
    /// Undersample simulated k-space and reconstruct it.
    Recon {
        /// Directory of simulated `.kfrg` files (default: <out>/sim).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "zf")]
        method: Method,
        #[arg(long)]
        sampling: SamplingKind,
    },
    /// Score reconstructions against references and compare methods.
    Evaluate {
        /// `NAME=DIR` of reconstructions; repeat for each method.
        #[arg(long = "pred", required = true)]
        preds: Vec<String>,
        /// Directory of references: simulated k-space or reconstructions.
        #[arg(long)]
        truth: PathBuf,
        /// Metric used for the rank statistics: psnr, ssim or mse.
        #[arg(long, default_value = "ssim")]
        metric: String,
    },
    /// Build training records, splits and a manifest.
    Export {
        /// Directory of simulated `.kfrg` files (default: <out>/sim).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Architectures to export (default: all).
        #[arg(long, value_delimiter = ',')]
        arch: Vec<Arch>,
    },
    /// simulate, recon (zf and cs for every scheme), evaluate and export.
    All {
        #[arg(long)]
        videos: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
