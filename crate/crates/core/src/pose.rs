//! Keypoint pose containers and the normalized-vector form used by the pose
//! metric.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skeleton::Skeleton;

#[derive(Debug, Error, PartialEq)]
pub enum PoseError {
    #[error("pose must not be empty")]
    Empty,
    #[error("pose contains a non-finite coordinate at joint {joint}")]
    NonFinite { joint: usize },
    #[error("pose is all zeros")]
    AllZero,
    #[error("pose has {got} joints, skeleton expects {expected}")]
    JointMismatch { got: usize, expected: usize },
    #[error("pose is degenerate after root-centering (all joints coincide)")]
    Degenerate,
}

/// A pose as 3D keypoint locations, one row per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose3D {
    joints: Vec<[f64; 3]>,
}

/// A pose as 2D image-plane keypoint locations, one row per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    joints: Vec<[f64; 2]>,
}

fn check_rows<const D: usize>(joints: &[[f64; D]]) -> Result<(), PoseError> {
    if joints.is_empty() {
        return Err(PoseError::Empty);
    }
    for (joint, row) in joints.iter().enumerate() {
        if row.iter().any(|c| !c.is_finite()) {
            return Err(PoseError::NonFinite { joint });
        }
    }
    if joints.iter().flatten().all(|&c| c == 0.0) {
        return Err(PoseError::AllZero);
    }
    Ok(())
}

impl Pose3D {
    pub fn new(joints: Vec<[f64; 3]>) -> Result<Self, PoseError> {
        check_rows(&joints)?;
        Ok(Self { joints })
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn joint(&self, index: usize) -> Vector3<f64> {
        Vector3::from(self.joints[index])
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.joints
    }

    pub fn iter(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.joints.iter().map(|&row| Vector3::from(row))
    }

    /// Rebuild from per-joint vectors, re-validating invariants.
    pub fn from_vectors(joints: Vec<Vector3<f64>>) -> Result<Self, PoseError> {
        Self::new(joints.into_iter().map(|v| [v.x, v.y, v.z]).collect())
    }

    pub fn check_skeleton(&self, skeleton: &Skeleton) -> Result<(), PoseError> {
        if self.len() != skeleton.joint_count() {
            return Err(PoseError::JointMismatch {
                got: self.len(),
                expected: skeleton.joint_count(),
            });
        }
        Ok(())
    }

    /// Root-centered, flattened, L2-normalized coordinate vector of length
    /// `joint_count * 3`. Scale and translation cancel here, which is what
    /// makes the downstream metric a pure shape comparison.
    pub fn normalized_vector(&self, skeleton: &Skeleton) -> Result<Vec<f64>, PoseError> {
        self.check_skeleton(skeleton)?;
        let root = self.joints[skeleton.root()];
        let flat: Vec<f64> = self
            .joints
            .iter()
            .flat_map(|row| [row[0] - root[0], row[1] - root[1], row[2] - root[2]])
            .collect();
        normalize_flat(flat)
    }
}

impl Pose2D {
    pub fn new(joints: Vec<[f64; 2]>) -> Result<Self, PoseError> {
        check_rows(&joints)?;
        Ok(Self { joints })
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn joint(&self, index: usize) -> Vector2<f64> {
        Vector2::from(self.joints[index])
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.joints
    }

    pub fn from_vectors(joints: Vec<Vector2<f64>>) -> Result<Self, PoseError> {
        Self::new(joints.into_iter().map(|v| [v.x, v.y]).collect())
    }

    pub fn check_skeleton(&self, skeleton: &Skeleton) -> Result<(), PoseError> {
        if self.len() != skeleton.joint_count() {
            return Err(PoseError::JointMismatch {
                got: self.len(),
                expected: skeleton.joint_count(),
            });
        }
        Ok(())
    }

    /// 2D counterpart of [`Pose3D::normalized_vector`], length
    /// `joint_count * 2`.
    pub fn normalized_vector(&self, skeleton: &Skeleton) -> Result<Vec<f64>, PoseError> {
        self.check_skeleton(skeleton)?;
        let root = self.joints[skeleton.root()];
        let flat: Vec<f64> = self
            .joints
            .iter()
            .flat_map(|row| [row[0] - root[0], row[1] - root[1]])
            .collect();
        normalize_flat(flat)
    }
}

const DEGENERATE_NORM: f64 = 1e-12;

fn normalize_flat(mut flat: Vec<f64>) -> Result<Vec<f64>, PoseError> {
    let norm = flat.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !norm.is_finite() || norm <= DEGENERATE_NORM {
        return Err(PoseError::Degenerate);
    }
    for c in &mut flat {
        *c /= norm;
    }
    Ok(flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{canonical_standing, Skeleton};
    use approx::assert_relative_eq;

    fn l2(v: &[f64]) -> f64 {
        v.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    #[test]
    fn rejects_non_finite_and_all_zero() {
        assert_eq!(
            Pose3D::new(vec![[0.0, f64::NAN, 0.0]; 17]).unwrap_err(),
            PoseError::NonFinite { joint: 0 }
        );
        assert_eq!(
            Pose3D::new(vec![[0.0; 3]; 17]).unwrap_err(),
            PoseError::AllZero
        );
        assert_eq!(Pose2D::new(vec![]).unwrap_err(), PoseError::Empty);
    }

    #[test]
    fn normalized_vector_has_unit_norm() {
        let sk = Skeleton::h36m17();
        let v = canonical_standing().normalized_vector(&sk).unwrap();
        assert_relative_eq!(l2(&v), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalization_cancels_scale() {
        let sk = Skeleton::h36m17();
        let pose = canonical_standing();
        let scaled = Pose3D::new(
            pose.rows()
                .iter()
                .map(|r| [r[0] * 3.7, r[1] * 3.7, r[2] * 3.7])
                .collect(),
        )
        .unwrap();
        let a = pose.normalized_vector(&sk).unwrap();
        let b = scaled.normalized_vector(&sk).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalization_cancels_translation() {
        let sk = Skeleton::h36m17();
        let pose = canonical_standing();
        let moved = Pose3D::new(
            pose.rows()
                .iter()
                .map(|r| [r[0] + 5.0, r[1] + 5.0, r[2] + 5.0])
                .collect(),
        )
        .unwrap();
        let a = pose.normalized_vector(&sk).unwrap();
        let b = moved.normalized_vector(&sk).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_after_centering_errors() {
        let sk = Skeleton::h36m17();
        // every joint at the same nonzero point: centering zeroes everything
        let pose = Pose3D::new(vec![[1.0, 2.0, 3.0]; 17]).unwrap();
        assert_eq!(
            pose.normalized_vector(&sk).unwrap_err(),
            PoseError::Degenerate
        );
    }

    #[test]
    fn skeleton_mismatch_detected() {
        let sk = Skeleton::h36m17();
        let pose = Pose3D::new(vec![[1.0, 0.0, 0.0]; 5]).unwrap();
        assert_eq!(
            pose.normalized_vector(&sk).unwrap_err(),
            PoseError::JointMismatch {
                got: 5,
                expected: 17
            }
        );
    }
}
