use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("triangle {tri} slot {slot} indexes past the end of the vertex buffer")]
    IndexOutOfRange { tri: usize, slot: usize },
    #[error("triangle {tri} repeats a vertex index")]
    DegenerateIndexTriple { tri: usize },
    #[error("vertex {vertex} has a non-finite component")]
    NonFiniteVertex { vertex: usize },
    #[error("attribute entry {index} is not finite")]
    NonFiniteAttribute { index: usize },
    #[error("viewport must be at least 1x1")]
    EmptyViewport,
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("texture size {size} must be a power of two for {levels} MIP levels")]
    NonPowerOfTwo { size: usize, levels: usize },
    #[error("invalid MIP level count {levels} for size {size}")]
    InvalidLevelCount { size: usize, levels: usize },
    #[error("lookup pixels must be strictly increasing and inside the image")]
    UnorderedLookups,
    #[error("sampling record does not match the request")]
    RecordMismatch,
    #[error("antialiasing event log does not match the inputs")]
    LogMismatch,
    #[error("zero-length vector at element {index}")]
    ZeroVector { index: usize },
    #[error("render_backward called without a matching render")]
    MissingActivations,
    #[error("channel {channel} out of range for {channels} channels")]
    ChannelOutOfRange { channel: usize, channels: usize },
}

impl Error {
    pub(crate) fn shape(what: &'static str, expected: usize, got: usize) -> Self {
        Error::ShapeMismatch {
            what,
            expected,
            got,
        }
    }
}
