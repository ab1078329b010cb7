use crate::{ValidationError, UNIT_TOLERANCE};

/// Pinhole camera: intrinsics plus a world-to-camera rigid transform.
///
/// Camera space is right-handed with +z looking forward; a world point `p`
/// maps to `R p + t`, and projects to pixel `(fx x/z + cx, fy y/z + cy)`.
/// The rotation is stored row-major and must be orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    fx: f32,
    fy: f32,
    cx: f32,
    cy: f32,
    rotation: [f32; 9],
    translation: [f32; 3],
    width: u32,
    height: u32,
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f32,
        fy: f32,
        cx: f32,
        cy: f32,
        rotation: [f32; 9],
        translation: [f32; 3],
        width: u32,
        height: u32,
    ) -> Result<Self, ValidationError> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(ValidationError::BadIntrinsics {
                reason: format!("focal lengths must be positive and finite (fx={fx}, fy={fy})"),
            });
        }
        if !cx.is_finite() || !cy.is_finite() {
            return Err(ValidationError::BadIntrinsics {
                reason: "principal point must be finite".to_string(),
            });
        }
        if width == 0 || height == 0 {
            return Err(ValidationError::BadIntrinsics {
                reason: format!("image dimensions must be >= 1 (got {width}x{height})"),
            });
        }
        for v in rotation.iter().chain(translation.iter()) {
            if !v.is_finite() {
                return Err(ValidationError::BadIntrinsics {
                    reason: "pose contains non-finite values".to_string(),
                });
            }
        }
        let deviation = orthonormal_deviation(&rotation);
        if deviation > UNIT_TOLERANCE {
            return Err(ValidationError::NonOrthonormalRotation { deviation });
        }
        Ok(Camera {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            width,
            height,
        })
    }

    /// Camera at `eye` looking toward `target`, `up` steering the vertical axis.
    pub fn look_at(
        fx: f32,
        fy: f32,
        cx: f32,
        cy: f32,
        eye: [f32; 3],
        target: [f32; 3],
        up: [f32; 3],
        width: u32,
        height: u32,
    ) -> Result<Self, ValidationError> {
        let eye64 = [eye[0] as f64, eye[1] as f64, eye[2] as f64];
        let fwd = normalize64([
            target[0] as f64 - eye64[0],
            target[1] as f64 - eye64[1],
            target[2] as f64 - eye64[2],
        ]);
        let right = normalize64(cross64(
            fwd,
            normalize64([up[0] as f64, up[1] as f64, up[2] as f64]),
        ));
        let down = cross64(fwd, right);
        // Rows of R are the camera axes expressed in world coordinates.
        let rotation = [
            right[0] as f32,
            right[1] as f32,
            right[2] as f32,
            down[0] as f32,
            down[1] as f32,
            down[2] as f32,
            fwd[0] as f32,
            fwd[1] as f32,
            fwd[2] as f32,
        ];
        // t = -R * eye so that the eye maps to the origin.
        let t = [
            -(right[0] * eye64[0] + right[1] * eye64[1] + right[2] * eye64[2]) as f32,
            -(down[0] * eye64[0] + down[1] * eye64[1] + down[2] * eye64[2]) as f32,
            -(fwd[0] * eye64[0] + fwd[1] * eye64[1] + fwd[2] * eye64[2]) as f32,
        ];
        Camera::new(fx, fy, cx, cy, rotation, t, width, height)
    }

    pub fn fx(&self) -> f32 {
        self.fx
    }
    pub fn fy(&self) -> f32 {
        self.fy
    }
    pub fn cx(&self) -> f32 {
        self.cx
    }
    pub fn cy(&self) -> f32 {
        self.cy
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn rotation(&self) -> &[f32; 9] {
        &self.rotation
    }
    pub fn translation(&self) -> &[f32; 3] {
        &self.translation
    }

    /// World point into camera space, in f64.
    pub fn to_camera_space(&self, p: [f32; 3]) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        let p = [p[0] as f64, p[1] as f64, p[2] as f64];
        [
            r[0] as f64 * p[0] + r[1] as f64 * p[1] + r[2] as f64 * p[2] + t[0] as f64,
            r[3] as f64 * p[0] + r[4] as f64 * p[1] + r[5] as f64 * p[2] + t[1] as f64,
            r[6] as f64 * p[0] + r[7] as f64 * p[1] + r[8] as f64 * p[2] + t[2] as f64,
        ]
    }

    /// Perspective projection of a camera-space point to pixel coordinates.
    pub fn project_camera_space(&self, p: [f64; 3]) -> (f64, f64) {
        (
            self.fx as f64 * p[0] / p[2] + self.cx as f64,
            self.fy as f64 * p[1] / p[2] + self.cy as f64,
        )
    }

    /// Camera center in world coordinates (`-R^T t`).
    pub fn position(&self) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            -(r[0] as f64 * t[0] as f64 + r[3] as f64 * t[1] as f64 + r[6] as f64 * t[2] as f64),
            -(r[1] as f64 * t[0] as f64 + r[4] as f64 * t[1] as f64 + r[7] as f64 * t[2] as f64),
            -(r[2] as f64 * t[0] as f64 + r[5] as f64 * t[1] as f64 + r[8] as f64 * t[2] as f64),
        ]
    }

    /// Viewing direction (+z axis of the camera) in world coordinates.
    pub fn forward(&self) -> [f64; 3] {
        let r = &self.rotation;
        [r[6] as f64, r[7] as f64, r[8] as f64]
    }

    /// Same pose and pixel-aspect intrinsics rescaled to a new resolution.
    pub fn scaled_to(&self, width: u32, height: u32) -> Result<Camera, ValidationError> {
        let sx = width as f32 / self.width as f32;
        let sy = height as f32 / self.height as f32;
        Camera::new(
            self.fx * sx,
            self.fy * sy,
            self.cx * sx,
            self.cy * sy,
            self.rotation,
            self.translation,
            width,
            height,
        )
    }
}

fn orthonormal_deviation(r: &[f32; 9]) -> f32 {
    // Max |R R^T - I| entry, computed in f64.
    let mut max_dev = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let mut dot = 0.0f64;
            for k in 0..3 {
                dot += r[3 * i + k] as f64 * r[3 * j + k] as f64;
            }
            let target = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((dot - target).abs());
        }
    }
    max_dev as f32
}

fn cross64(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize64(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}
