use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use alr_lab::commands::{cmd_compare, cmd_export_heatmap, cmd_gradcheck, cmd_kd_demo, cmd_train};

/// Training laboratory for adaptive label regularization: run experiments,
/// compare methods across seeds, verify gradients, and export residual-label
/// heatmaps.
#[derive(Parser)]
#[command(name = "alr-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training experiment described by a JSON config file
    Train {
        /// Path to the experiment config
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
    },
    /// Train several methods across seeds and aggregate final test accuracy
    Compare {
        /// Path to the experiment config (method and seed are overridden per cell)
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        /// Comma-separated methods, e.g. baseline,lsr,alr,alr-s,kd
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        /// Comma-separated seeds, e.g. 1,2,3,4,5
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
    },
    /// Check every analytic gradient against central finite differences
    Gradcheck {
        /// Deliberately corrupt one gradient to demonstrate a failing check
        #[arg(long)]
        corrupt: bool,
    },
    /// Print the worked example where hard and soft labels pull a logit in
    /// opposite directions, and the blended target that resolves it
    KdDemo,
    /// Render snapshot matrices from a finished run as full-size heatmaps
    /// and export the entropy trajectory
    ExportHeatmap {
        /// Directory a `train` run wrote its artifacts into
        #[arg(short = 'r', long = "run-dir")]
        run_dir: PathBuf,
        /// Comma-separated snapshot epochs to render, e.g. 1,5,10,50,100
        #[arg(short = 'e', long = "epochs", value_delimiter = ',', required = true)]
        epochs: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { config } => cmd_train(config),
        Command::Compare {
            config,
            methods,
            seeds,
        } => cmd_compare(config, methods, seeds),
        Command::Gradcheck { corrupt } => cmd_gradcheck(*corrupt),
        Command::KdDemo => cmd_kd_demo(),
        Command::ExportHeatmap { run_dir, epochs } => cmd_export_heatmap(run_dir, epochs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
