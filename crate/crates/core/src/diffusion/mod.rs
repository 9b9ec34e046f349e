//! Pose diffusion machinery: noise schedules, forward diffusion, reverse
//! sampling with a clean-pose-predicting denoiser, a small trainable
//! denoiser, and an analytic Gaussian oracle for tests.

mod denoiser;
mod sampler;
mod schedule;
mod toy;

pub use denoiser::{Denoiser, GaussianOracleDenoiser};
pub use sampler::{diffuse_forward, sample_pose, training_loss};
pub use schedule::{make_schedule, NoiseSchedule};
pub use toy::{
    time_embedding, train_toy_denoiser, two_mode_dataset, ToyDenoiser, TrainConfig, TrainingReport,
};

use thiserror::Error;

use crate::pose::PoseError;

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error("beta bounds must satisfy 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]")]
    InvalidBetaRange { beta_min: f64, beta_max: f64 },
    #[error("diffusion step {t} out of range 1..={max}")]
    StepOutOfRange { t: usize, max: usize },
    #[error("denoiser produced a non-finite output at step {t}")]
    NonFiniteDenoiserOutput { t: usize },
    #[error("variance must be non-negative, got {0}")]
    NegativeVariance(f64),
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("training diverged: non-finite loss at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("denoiser expects {expected} joints, got {got}")]
    JointMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Pose(#[from] PoseError),
}
