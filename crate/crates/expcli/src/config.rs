//! Experiment configuration and its validation.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Cube,
    Earth,
    Envphong,
    Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Coloring {
    /// One color per cube corner, shared by the faces meeting there.
    Continuous,
    /// One color per face corner.
    Discontinuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PoseMode {
    /// Adam on a pose that receives ramped-down noise every step.
    Plain,
    /// Greedy gradient-free search with ramped noise, then Adam.
    TwoPhase,
    /// Like two-phase, with random cube symmetries mixed into proposals.
    Symmetry,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub resolution: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Learning rate at the first and last iteration, interpolated
    /// exponentially.
    pub lr: [f64; 2],
    pub out_dir: Option<PathBuf>,
    /// Write a PNG frame every this many iterations; 0 disables.
    pub snapshot_every: usize,
    /// Cube: coloring mode and the vertex perturbation half-width.
    pub coloring: Coloring,
    pub perturbation: f64,
    /// Earth/envphong: cube-map face size and mipmapping.
    pub texture_size: usize,
    pub mipmaps: bool,
    /// Earth: camera distance range and reference supersampling factor.
    pub distance: [f64; 2],
    pub supersample: usize,
    /// Pose: mode, trial count and noise strength endpoints.
    pub mode: PoseMode,
    pub trials: usize,
    pub noise: [f64; 2],
}

impl ExperimentConfig {
    /// Desk-scale defaults.
    pub fn new(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            resolution: 16,
            iterations: 5000,
            seed: 0,
            lr: [1e-2, 1e-4],
            out_dir: None,
            snapshot_every: 0,
            coloring: Coloring::Continuous,
            perturbation: 0.5,
            texture_size: 128,
            mipmaps: true,
            distance: [1.5, 50.0],
            supersample: 8,
            mode: PoseMode::Symmetry,
            trials: 20,
            noise: [1.0, 0.003],
        };
        match experiment {
            Experiment::Cube => base,
            Experiment::Earth => Self {
                resolution: 128,
                iterations: 2000,
                lr: [1e-2, 1e-3],
                ..base
            },
            Experiment::Envphong => Self {
                resolution: 64,
                iterations: 2000,
                lr: [1e-2, 1e-2],
                texture_size: 32,
                ..base
            },
            Experiment::Pose => Self {
                resolution: 32,
                iterations: 2000,
                lr: [1e-2, 1e-3],
                ..base
            },
        }
    }

    /// The full-size settings of the original experiments.
    pub fn full_scale(mut self) -> Self {
        match self.experiment {
            Experiment::Cube => self.iterations = 5000,
            Experiment::Earth => {
                self.resolution = 512;
                self.texture_size = 512;
                self.iterations = 20000;
            }
            Experiment::Envphong => {
                self.resolution = 512;
                self.texture_size = 512;
                self.iterations = 20000;
            }
            Experiment::Pose => {
                self.resolution = 256;
                self.iterations = 10000;
                self.trials = 100;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError(m));
        if self.resolution < 2 {
            return fail(format!("resolution must be >= 2, got {}", self.resolution));
        }
        // Earth accepts zero iterations to log the gray-texture baseline.
        if self.iterations < 1 && self.experiment != Experiment::Earth {
            return fail("iterations must be >= 1".into());
        }
        if !self.lr.iter().all(|&l| l.is_finite() && l > 0.0) {
            return fail(format!("learning rates must be positive, got {:?}", self.lr));
        }
        match self.experiment {
            Experiment::Cube => {
                if !(0.0..=1.0).contains(&self.perturbation) {
                    return fail(format!("perturbation must be in [0, 1], got {}", self.perturbation));
                }
            }
            Experiment::Earth | Experiment::Envphong => {
                if !self.texture_size.is_power_of_two() || self.texture_size < 2 {
                    return fail(format!(
                        "texture size must be a power of two >= 2, got {}",
                        self.texture_size
                    ));
                }
                let [d0, d1] = self.distance;
                if !(d0 > 1.0 && d1 >= d0 && d1.is_finite()) {
                    return fail(format!("distance range must satisfy 1 < lo <= hi, got {:?}", self.distance));
                }
                if self.supersample < 1 {
                    return fail("supersample must be >= 1".into());
                }
            }
            Experiment::Pose => {
                if self.trials < 1 {
                    return fail("trials must be >= 1".into());
                }
                if !self.noise.iter().all(|&n| (0.0..=1.0).contains(&n) && n > 0.0) {
                    return fail(format!("noise strengths must be in (0, 1], got {:?}", self.noise));
                }
            }
        }
        Ok(())
    }
}
