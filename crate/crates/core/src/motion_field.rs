use crate::ValidationError;

/// Per-Gaussian motion between two frames: displacement `dmu`, rotation
/// delta `drot` (raw quaternion, normalized at application), and the
/// moved-point mask used by the residual codec.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    count: usize,
    dmu: Vec<f32>,
    drot: Vec<f32>,
    moved: Vec<bool>,
}

impl MotionField {
    pub fn new(dmu: Vec<f32>, drot: Vec<f32>, moved: Vec<bool>) -> Result<Self, ValidationError> {
        let count = moved.len();
        if dmu.len() != 3 * count {
            return Err(ValidationError::LengthMismatch {
                field: "dmu",
                expected: 3 * count,
                actual: dmu.len(),
            });
        }
        if drot.len() != 4 * count {
            return Err(ValidationError::LengthMismatch {
                field: "drot",
                expected: 4 * count,
                actual: drot.len(),
            });
        }
        for (i, v) in dmu.iter().enumerate() {
            if !v.is_finite() {
                return Err(ValidationError::NonFinite {
                    field: "dmu",
                    index: i,
                });
            }
        }
        for (i, v) in drot.iter().enumerate() {
            if !v.is_finite() {
                return Err(ValidationError::NonFinite {
                    field: "drot",
                    index: i,
                });
            }
        }
        Ok(MotionField {
            count,
            dmu,
            drot,
            moved,
        })
    }

    /// Field that leaves every Gaussian untouched.
    pub fn identity(count: usize) -> Self {
        let mut drot = vec![0.0; 4 * count];
        for i in 0..count {
            drot[4 * i] = 1.0;
        }
        MotionField {
            count,
            dmu: vec![0.0; 3 * count],
            drot,
            moved: vec![false; count],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }
    pub fn dmu(&self) -> &[f32] {
        &self.dmu
    }
    pub fn drot(&self) -> &[f32] {
        &self.drot
    }
    pub fn moved(&self) -> &[bool] {
        &self.moved
    }

    pub fn dmu_of(&self, i: usize) -> [f32; 3] {
        [self.dmu[3 * i], self.dmu[3 * i + 1], self.dmu[3 * i + 2]]
    }

    pub fn drot_of(&self, i: usize) -> [f32; 4] {
        [
            self.drot[4 * i],
            self.drot[4 * i + 1],
            self.drot[4 * i + 2],
            self.drot[4 * i + 3],
        ]
    }

    pub fn moved_count(&self) -> usize {
        self.moved.iter().filter(|m| **m).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_field_has_unit_quaternions() {
        let f = MotionField::identity(3);
        assert_eq!(f.count(), 3);
        assert_eq!(f.drot_of(1), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.dmu_of(2), [0.0; 3]);
        assert_eq!(f.moved_count(), 0);
    }

    #[test]
    fn rejects_non_finite_displacement() {
        let mut dmu = vec![0.0; 3];
        dmu[1] = f32::INFINITY;
        let drot = vec![1.0, 0.0, 0.0, 0.0];
        assert!(MotionField::new(dmu, drot, vec![false]).is_err());
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(MotionField::new(vec![0.0; 3], vec![0.0; 4], vec![false, true]).is_err());
    }
}
