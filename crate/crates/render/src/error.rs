use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("unsupported SH degree {0} (max {max})", max = crate::sh::MAX_SH_DEGREE)]
    UnsupportedShDegree(u32),

    #[error("forward state does not match backward inputs: {0}")]
    StateMismatch(String),

    #[error("pixel gradient dimensions {got_w}x{got_h} do not match image {want_w}x{want_h}")]
    GradientDims {
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },

    #[error(transparent)]
    Validation(#[from] igs_core::ValidationError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad image file: {0}")]
    BadImageFile(String),
}
