use thiserror::Error;

/// First violated invariant found while constructing or auditing a core type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("non-unit quaternion at {index} (norm {norm})")]
    NonUnitRotation { index: usize, norm: f32 },

    #[error("non-positive scale at {index} (component {component} = {value})")]
    NonPositiveScale {
        index: usize,
        component: usize,
        value: f32,
    },

    #[error("opacity out of range at {index} (value {value})")]
    OpacityOutOfRange { index: usize, value: f32 },

    #[error("non-finite value in {field} at {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("length mismatch for {field}: expected {expected}, got {actual}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("camera intrinsics invalid: {reason}")]
    BadIntrinsics { reason: String },

    #[error("camera rotation not orthonormal (max deviation {deviation})")]
    NonOrthonormalRotation { deviation: f32 },

    #[error("image dimensions invalid: {reason}")]
    BadImageDims { reason: String },

    #[error("image value out of [0,1] at {index} (value {value})")]
    ImageValueOutOfRange { index: usize, value: f32 },
}
