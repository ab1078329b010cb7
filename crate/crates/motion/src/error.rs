use thiserror::Error;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("anchor count {requested} exceeds point count {available}")]
    TooManyAnchors { requested: usize, available: usize },

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),

    #[error("count mismatch: set has {set} Gaussians, motion field has {field}")]
    CountMismatch { set: usize, field: usize },

    #[error("rank-deficient calibration system; use a positive ridge")]
    RankDeficient,

    #[error(transparent)]
    Validation(#[from] igs_core::ValidationError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad weights file: {0}")]
    BadWeightsFile(String),

    #[error("bad feature map file: {0}")]
    BadMapFile(String),
}
