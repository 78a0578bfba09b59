//! Optimization machinery for inverse rendering: Adam, image losses,
//! high-pass filtering, a mesh Laplacian regularizer, an overparameterized
//! deformation model and quaternion pose noise.

pub mod adam;
pub mod deform;
mod error;
pub mod highpass;
pub mod laplacian;
pub mod loss;
pub mod quat;

pub use adam::{exp_schedule, AdamConfig, AdamState};
pub use error::{OptimError, Result};
pub use highpass::{highpass, highpass_transpose};
pub use laplacian::LaplacianReg;
pub use loss::l2_image_loss;
pub use quat::PoseQuat;
