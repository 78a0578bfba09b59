use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use diffrast_cli::{run, Coloring, Experiment, ExperimentConfig, PoseMode};

/// Desk-scale inverse-rendering experiments.
#[derive(Debug, Parser)]
#[command(name = "diffrast", version)]
struct Cli {
    experiment: Experiment,
    /// Render resolution (square).
    #[arg(long)]
    res: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for config.json, log.csv, frames and artifacts.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    no_mipmaps: bool,
    #[arg(long, value_enum)]
    coloring: Option<Coloring>,
    #[arg(long, value_enum)]
    mode: Option<PoseMode>,
    /// Use the full-size settings instead of desk scale.
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    texture_size: Option<usize>,
    /// Write a frame every N iterations (0 disables).
    #[arg(long, default_value_t = 100)]
    snapshot_every: usize,
}

fn config(cli: &Cli) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(cli.experiment);
    if cli.full_scale {
        cfg = cfg.full_scale();
    }
    cfg.seed = cli.seed;
    cfg.out_dir = Some(cli.out.clone());
    cfg.snapshot_every = cli.snapshot_every;
    cfg.mipmaps = !cli.no_mipmaps;
    if let Some(r) = cli.res {
        cfg.resolution = r;
    }
    if let Some(i) = cli.iters {
        cfg.iterations = i;
    }
    if let Some(c) = cli.coloring {
        cfg.coloring = c;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = cli.texture_size {
        cfg.texture_size = s;
    }
    cfg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&config(&cli)) {
        Ok(summary) => {
            println!(
                "{:?}: {} records, final metric {}",
                cli.experiment,
                summary.log.len(),
                summary.metric
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
