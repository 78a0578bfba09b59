//! Slow, obviously-correct reference implementations used as test oracles,
//! plus finite-difference and random-instance helpers.
//!
//! Nothing here shares code with the primitives it checks.

pub mod fd;
pub mod gradsuite;
pub mod oracle;
pub mod scene;

pub use fd::{assert_grad_close, central_diff, GradCheck};
pub use scene::{rng, RandomScene};
