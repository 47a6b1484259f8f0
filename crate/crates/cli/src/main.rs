//! Experiment driver for spectral block-model clustering.
//!
//! Subcommands: `generate` (edge lists + sidecars), `cluster` (one graph end
//! to end), `evaluate` (error criteria against sidecar truth), `experiment`
//! (full Monte Carlo grid with bound reports), `bounds` (the concentration
//! study). Exit status: 0 on success, 1 on configuration or hard errors,
//! 2 when some replicates failed but the run completed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ClusterArgs, Outcome};
use sbm_spectral::cluster::ApproxConfig;
use sbm_spectral::experiment::PipelineConfig;
use sbm_spectral::spectral::EigenConfig;

/// Environment variable overriding the worker-thread count.
const THREADS_ENV: &str = "SBM_SPECTRAL_THREADS";

#[derive(Parser)]
#[command(
    name = "sbm-spectral",
    about = "Spectral community detection experiments on (degree-corrected) stochastic block models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample adjacency matrices for every (cell, replicate) of a config grid.
    Generate {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for edge lists and sidecars.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run spectral clustering on one edge-list file.
    Cluster {
        /// Edge-list file ("n m" header then "i j" lines).
        #[arg(long)]
        graph: PathBuf,
        /// Number of communities.
        #[arg(long)]
        k: usize,
        /// kmeans-spectral | spherical-kmedian
        #[arg(long, default_value = "kmeans-spectral")]
        algorithm: String,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a clustering result against the sidecar truth.
    Evaluate {
        /// ClusterOutput JSON produced by `cluster`.
        #[arg(long)]
        result: PathBuf,
        /// Graph sidecar JSON produced by `generate`.
        #[arg(long)]
        truth: PathBuf,
        /// Error-report JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full Monte Carlo grid: results CSV, bound-report CSV, study JSON.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the spectral-norm concentration study and report C_empirical.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// Study JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate { config, out } => commands::cmd_generate(config, out),
        Command::Cluster {
            graph,
            k,
            algorithm,
            restarts,
            max_iterations,
            epsilon,
            seed,
            out,
        } => commands::cmd_cluster(&ClusterArgs {
            graph: graph.clone(),
            k: *k,
            algorithm: algorithm.clone(),
            pipeline: PipelineConfig {
                eigen: EigenConfig::default(),
                cluster: ApproxConfig {
                    restarts: *restarts,
                    max_iterations: *max_iterations,
                    epsilon_target: *epsilon,
                    seed: *seed,
                    ..ApproxConfig::default()
                },
                epsilon: *epsilon,
                ..PipelineConfig::default()
            },
            out: out.clone(),
        }),
        Command::Evaluate { result, truth, out } => {
            commands::cmd_evaluate(result, truth, out.as_deref())
        }
        Command::Experiment { config, out } => commands::cmd_experiment(config, out),
        Command::Bounds { config, out } => commands::cmd_bounds(config, out.as_deref()),
    };
    match outcome {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::PartialFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        match value.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid {THREADS_ENV}={value}"),
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() {}
