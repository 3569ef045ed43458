use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {value} is outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },

    #[error("step count must be at least 1")]
    ZeroSteps,

    #[error("a varying cheat schedule needs at least one probability")]
    EmptySchedule,

    #[error("at least one process is required")]
    NoProcesses,

    #[error("column index {index} is outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("group size k = {k} must satisfy 1 <= k <= n = {n}")]
    GroupSize { k: usize, n: usize },

    #[error("process ids must be exactly 1..=n in order; found {found} at position {position}")]
    ProcessIds { position: usize, found: u32 },

    #[error("answer {value} at position {position} is not binary")]
    NotBinary { position: usize, value: u8 },

    #[error("trial count must be at least 1")]
    ZeroTrials,

    #[error("checkpoint {checkpoint} exceeds horizon {horizon}")]
    CheckpointBeyondHorizon { checkpoint: u64, horizon: u64 },

    #[error("checkpoint list must be non-empty, strictly increasing and start at 1 or later")]
    InvalidCheckpoints,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
