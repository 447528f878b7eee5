use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("mesh has no vertices")]
    NoVertices,
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {face} has {len} indices; at least 3 are required")]
    ShortFace { face: usize, len: usize },
    #[error("{what}: expected {expected} entries, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("embedder capability unavailable: {0}")]
    Capability(String),
    #[error("non-finite loss at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("{0}")]
    Observer(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}
