//! `physlayout` command-line runner.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::SampleArgs;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "physlayout", version, about = "Physics-guided diffusion for indoor scene layouts")]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test corpus and its manifest.
    GenData {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the denoiser on the training split of a corpus.
    Train {
        /// Manifest file or corpus directory.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from this checkpoint instead of a fresh initialisation.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Sample layouts for template scenes.
    Sample {
        #[arg(long, conflicts_with = "analytic")]
        ckpt: Option<PathBuf>,
        /// Use an exact Gaussian score centred on each template's own poses.
        #[arg(long)]
        analytic: bool,
        /// Manifest (test split), directory of scene files, or one scene file.
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_guidance: bool,
    },
    /// Score generated scenes against ground truth.
    Eval {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Report JSON path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Settle scenes and measure relation stability.
    Simulate {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a posed scene as Wavefront OBJ.
    ExportObj {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenData { count, out } => commands::gen_data(&cfg, count, out),
        Command::Train { data, out, resume } => commands::train(&cfg, &data, out, resume.as_deref()),
        Command::Sample { ckpt, analytic, templates, out, no_guidance } => commands::sample(
            &cfg,
            SampleArgs { ckpt: ckpt.as_deref(), analytic, templates: &templates, out, no_guidance },
        ),
        Command::Eval { scenes, truth, out } => commands::eval(&cfg, &scenes, &truth, out),
        Command::Simulate { scenes, runs, out } => commands::simulate(&cfg, &scenes, runs, out),
        Command::ExportObj { scene, out } => commands::export_obj(&scene, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
