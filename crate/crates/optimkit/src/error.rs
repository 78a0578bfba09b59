use thiserror::Error;

pub type Result<T> = std::result::Result<T, OptimError>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptimError {
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("vertex {vertex} has an empty one-ring")]
    IsolatedVertex { vertex: usize },
    #[error("frame {frame} out of range for {frames} frames")]
    FrameOutOfRange { frame: usize, frames: usize },
}

pub(crate) fn shape(what: &'static str, expected: usize, got: usize) -> OptimError {
    OptimError::ShapeMismatch {
        what,
        expected,
        got,
    }
}
