//! Inverse-rendering experiments on top of the diffrast primitives, plus
//! the mesh/image/log IO they need.
//!
//! Each experiment is a plain function of an [`ExperimentConfig`] that
//! returns its convergence log and final artifacts; [`run`] additionally
//! writes everything under the configured output directory.

pub mod camera;
pub mod config;
pub mod experiments;
pub mod io;
pub mod log;
pub mod mesh;
pub mod output;

use thiserror::Error;

pub use config::{Coloring, ConfigError, Experiment, ExperimentConfig, PoseMode};
pub use experiments::{run, run_cube, run_earth, run_earth_pair, run_envphong, run_pose};
pub use io::{load_obj, read_png, write_csv, write_png, IoError};
pub use log::ConvergenceLog;
pub use output::Output;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("render: {0}")]
    Render(#[from] diffrast_core::Error),
    #[error("optimizer: {0}")]
    Optim(#[from] diffrast_optim::OptimError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("log: {0}")]
    Log(#[from] log::OrderError),
    #[error("loss became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },
}

impl ExpError {
    /// Process exit code for the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Config(_) => 2,
            ExpError::Diverged { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExpError>;

/// Peak signal-to-noise ratio in dB for signals with peak 1.
pub fn psnr(a: &[f32], b: &[f32]) -> f64 {
    let mse = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / a.len().max(1) as f64;
    -10.0 * mse.log10()
}
