//! Command-line surface of the pose-diversification pipeline. Each
//! subcommand reads and writes the documented file formats; failures exit
//! nonzero with a machine-readable error record on stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Common;

#[derive(Parser)]
#[command(
    name = "posediv",
    about = "Diversify the poses of a synthetic human dataset",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train (or load) the pose denoiser and sample novel poses to a pose
    /// file.
    GenPoses {
        #[command(flatten)]
        common: Common,
        /// Output pose file.
        #[arg(long)]
        out: PathBuf,
        /// Number of poses to sample.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Training dataset pose file (defaults to the built-in two-mode
        /// distribution).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Skip training and load denoiser parameters from this file.
        #[arg(long)]
        load_denoiser: Option<PathBuf>,
        /// Save trained denoiser parameters to this file.
        #[arg(long)]
        save_denoiser: Option<PathBuf>,
    },
    /// Build the diversity-constrained novel pose set.
    BuildSet {
        #[command(flatten)]
        common: Common,
        /// Output pose set file.
        #[arg(long)]
        out: PathBuf,
        /// Draw candidates from a pose file in order.
        #[arg(long, conflicts_with = "denoiser")]
        from_poses: Option<PathBuf>,
        /// Draw candidates from a trained denoiser via reverse sampling.
        #[arg(long)]
        denoiser: Option<PathBuf>,
    },
    /// Plan translation jobs from source records and a novel pose set.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Source records (line-delimited JSON).
        #[arg(long)]
        sources: PathBuf,
        /// Novel pose set file.
        #[arg(long)]
        set: PathBuf,
        /// Output manifest (line-delimited JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a manifest through the configured translator adapter.
    Run {
        #[command(flatten)]
        common: Common,
        /// Manifest file from `plan`.
        #[arg(long)]
        manifest: PathBuf,
        /// Output results (line-delimited JSON).
        #[arg(long)]
        out: PathBuf,
        /// Working directory for external-adapter pose files.
        #[arg(long)]
        work_dir: Option<PathBuf>,
    },
    /// Partition generated steps by the pose-distance sanity check.
    Filter {
        #[command(flatten)]
        common: Common,
        /// Results file from `run`.
        #[arg(long)]
        results: PathBuf,
        /// Output partition (line-delimited JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract and clean masks, compute resize factors, and emit placement
    /// specs.
    Compose {
        #[command(flatten)]
        common: Common,
        /// Generated raster images (plain PPM), paired up for occlusion.
        #[arg(long, required = true, num_args = 1..)]
        raster: Vec<PathBuf>,
        /// Source records supplying the human-size table.
        #[arg(long)]
        sources: PathBuf,
        /// Directory for cleaned masks (plain PBM).
        #[arg(long)]
        mask_dir: PathBuf,
        /// Background image identifier recorded in the placement specs.
        #[arg(long, default_value = "background-0")]
        background: String,
        /// Output placement specs (line-delimited JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a run as comma-delimited tables.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Novel pose set file (enables the diversity histogram).
        #[arg(long)]
        set: Option<PathBuf>,
        /// Filter partition file (enables the counts table).
        #[arg(long)]
        filtered: Option<PathBuf>,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, result) = match cli.command {
        Command::GenPoses {
            common,
            out,
            count,
            dataset,
            load_denoiser,
            save_denoiser,
        } => (
            "gen-poses",
            commands::gen_poses(&common, &out, count, dataset, load_denoiser, save_denoiser),
        ),
        Command::BuildSet {
            common,
            out,
            from_poses,
            denoiser,
        } => (
            "build-set",
            commands::build_set(&common, &out, from_poses, denoiser),
        ),
        Command::Plan {
            common,
            sources,
            set,
            out,
        } => ("plan", commands::plan(&common, &sources, &set, &out)),
        Command::Run {
            common,
            manifest,
            out,
            work_dir,
        } => ("run", commands::run(&common, &manifest, &out, work_dir)),
        Command::Filter {
            common,
            results,
            out,
        } => ("filter", commands::filter(&common, &results, &out)),
        Command::Compose {
            common,
            raster,
            sources,
            mask_dir,
            background,
            out,
        } => (
            "compose",
            commands::compose(&common, &raster, &sources, &mask_dir, &background, &out),
        ),
        Command::Stats {
            common,
            set,
            filtered,
            out,
        } => ("stats", commands::stats(&common, set, filtered, out)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("{}", error.record(stage));
            ExitCode::FAILURE
        }
    }
}
