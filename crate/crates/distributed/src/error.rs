use thiserror::Error;

pub type Result<T, E = DistError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DistError {
    #[error(transparent)]
    Core(#[from] sensorsift_core::Error),

    #[error("k = {k} must be below N = {n}")]
    InvalidK { k: usize, n: usize },

    /// A message could not be delivered. `hop` counts messages sent so far
    /// in the run, starting at 1.
    #[error("hop {hop}: node {src} cannot reach node {dst}")]
    SimFault { hop: usize, src: usize, dst: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),
}
