//! Camera extrinsics and 3D-to-2D projection.
//!
//! Camera frames are right-handed with x = right, y = up, z = viewing
//! direction, so depth is positive for points in front of the camera.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{Pose2D, Pose3D, PoseError};

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("camera position and look-at target coincide")]
    ZeroViewDirection,
    #[error("camera up vector is zero")]
    ZeroUp,
    #[error("camera view direction is parallel to the up vector")]
    DegenerateBasis,
    #[error("camera contains a non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProjectionError {
    #[error("focal length must be positive, got {0}")]
    NonPositiveFocal(f64),
    #[error("joint {joint} is at or behind the camera plane (depth {depth})")]
    BehindCamera { joint: usize, depth: f64 },
    #[error("mean joint depth too close to zero for weak-perspective scaling")]
    DegenerateDepth,
    #[error(transparent)]
    Pose(#[from] PoseError),
}

/// Camera extrinsics as position / look-at / world-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    position: [f64; 3],
    look_at: [f64; 3],
    up: [f64; 3],
}

impl CameraPose {
    pub fn new(position: [f64; 3], look_at: [f64; 3], up: [f64; 3]) -> Result<Self, CameraError> {
        let all = position.iter().chain(&look_at).chain(&up);
        if all.into_iter().any(|c| !c.is_finite()) {
            return Err(CameraError::NonFinite);
        }
        let camera = Self {
            position,
            look_at,
            up,
        };
        camera.basis()?;
        Ok(camera)
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    pub fn look_at(&self) -> Vector3<f64> {
        Vector3::from(self.look_at)
    }

    pub fn up(&self) -> Vector3<f64> {
        Vector3::from(self.up)
    }

    /// Orthonormal basis of the camera frame.
    pub fn basis(&self) -> Result<CameraBasis, CameraError> {
        let view = self.look_at() - self.position();
        if view.norm() == 0.0 {
            return Err(CameraError::ZeroViewDirection);
        }
        if self.up().norm() == 0.0 {
            return Err(CameraError::ZeroUp);
        }
        let forward = view.normalize();
        let right = forward.cross(&self.up());
        if right.norm() < 1e-12 {
            return Err(CameraError::DegenerateBasis);
        }
        let right = right.normalize();
        let up = right.cross(&forward);
        Ok(CameraBasis { right, up, forward })
    }
}

/// Right-handed camera frame axes in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraBasis {
    pub right: Vector3<f64>,
    pub up: Vector3<f64>,
    pub forward: Vector3<f64>,
}

/// Projection model for dropping a camera-frame pose to the image plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ProjectionConfig {
    /// Scale x/y uniformly by `focal / mean_depth`, then drop depth.
    WeakPerspective { focal_length: f64 },
    /// Per-joint division by depth: `(focal * x / z, focal * y / z)`.
    Pinhole { focal_length: f64 },
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig::WeakPerspective { focal_length: 1.0 }
    }
}

impl ProjectionConfig {
    pub fn focal_length(&self) -> f64 {
        match self {
            ProjectionConfig::WeakPerspective { focal_length }
            | ProjectionConfig::Pinhole { focal_length } => *focal_length,
        }
    }

    pub fn validate(&self) -> Result<(), ProjectionError> {
        let focal = self.focal_length();
        if !focal.is_finite() || focal <= 0.0 {
            return Err(ProjectionError::NonPositiveFocal(focal));
        }
        Ok(())
    }
}

/// Express a world-frame pose in the camera's (right, up, forward) frame.
/// Rigid, so pairwise joint distances are preserved.
pub fn transform_to_camera(pose: &Pose3D, camera: &CameraPose) -> Result<Pose3D, CameraError> {
    let basis = camera.basis()?;
    let origin = camera.position();
    let joints = pose
        .iter()
        .map(|joint| {
            let rel = joint - origin;
            Vector3::new(
                rel.dot(&basis.right),
                rel.dot(&basis.up),
                rel.dot(&basis.forward),
            )
        })
        .collect();
    Ok(Pose3D::from_vectors(joints).expect("rigid transform preserves validity"))
}

/// Project a camera-frame pose to the image plane.
pub fn project_to_2d(
    pose_cam: &Pose3D,
    config: &ProjectionConfig,
) -> Result<Pose2D, ProjectionError> {
    config.validate()?;
    let focal = config.focal_length();
    let joints: Vec<[f64; 2]> = match config {
        ProjectionConfig::WeakPerspective { .. } => {
            let mean_depth = pose_cam.iter().map(|j| j.z).sum::<f64>() / pose_cam.len() as f64;
            if mean_depth.abs() < 1e-12 {
                return Err(ProjectionError::DegenerateDepth);
            }
            let scale = focal / mean_depth;
            pose_cam
                .iter()
                .map(|j| [j.x * scale, j.y * scale])
                .collect()
        }
        ProjectionConfig::Pinhole { .. } => {
            let mut rows = Vec::with_capacity(pose_cam.len());
            for (joint, j) in pose_cam.iter().enumerate() {
                if j.z <= 0.0 {
                    return Err(ProjectionError::BehindCamera { joint, depth: j.z });
                }
                rows.push([focal * j.x / j.z, focal * j.y / j.z]);
            }
            rows
        }
    };
    Ok(Pose2D::new(joints)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::canonical_standing;
    use approx::assert_relative_eq;

    fn pairwise_distances(pose: &Pose3D) -> Vec<f64> {
        let n = pose.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                out.push((pose.joint(i) - pose.joint(j)).norm());
            }
        }
        out
    }

    #[test]
    fn rejects_degenerate_cameras() {
        assert_eq!(
            CameraPose::new([1.0; 3], [1.0; 3], [0.0, 1.0, 0.0]).unwrap_err(),
            CameraError::ZeroViewDirection
        );
        assert_eq!(
            CameraPose::new([0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]).unwrap_err(),
            CameraError::ZeroUp
        );
        assert_eq!(
            CameraPose::new([0.0; 3], [0.0, 2.0, 0.0], [0.0, 1.0, 0.0]).unwrap_err(),
            CameraError::DegenerateBasis
        );
    }

    #[test]
    fn identity_camera_flips_depth_only() {
        // camera at origin looking down world -z: x/y pass through, z negates
        let camera = CameraPose::new([0.0; 3], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]).unwrap();
        let pose = canonical_standing();
        let cam = transform_to_camera(&pose, &camera).unwrap();
        for (orig, got) in pose.iter().zip(cam.iter()) {
            assert_relative_eq!(got.x, orig.x, epsilon = 1e-12);
            assert_relative_eq!(got.y, orig.y, epsilon = 1e-12);
            assert_relative_eq!(got.z, -orig.z, epsilon = 1e-12);
        }
    }

    #[test]
    fn shared_world_offset_cancels() {
        let pose = canonical_standing();
        let offset = [3.0, -2.0, 7.0];
        let camera_a = CameraPose::new([4.0, 1.5, 8.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        let camera_b = CameraPose::new(
            [4.0 + offset[0], 1.5 + offset[1], 8.0 + offset[2]],
            [offset[0], 1.0 + offset[1], offset[2]],
            [0.0, 1.0, 0.0],
        )
        .unwrap();
        let moved = Pose3D::new(
            pose.rows()
                .iter()
                .map(|r| [r[0] + offset[0], r[1] + offset[1], r[2] + offset[2]])
                .collect(),
        )
        .unwrap();
        let a = transform_to_camera(&pose, &camera_a).unwrap();
        let b = transform_to_camera(&moved, &camera_b).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_relative_eq!((x - y).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn camera_transform_preserves_pairwise_distances() {
        let camera = CameraPose::new([2.0, 3.5, -4.0], [0.3, 1.0, 0.2], [0.0, 1.0, 0.0]).unwrap();
        let pose = canonical_standing();
        let cam = transform_to_camera(&pose, &camera).unwrap();
        for (a, b) in pairwise_distances(&pose)
            .iter()
            .zip(pairwise_distances(&cam))
        {
            assert_relative_eq!(*a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn weak_perspective_of_planar_pose_is_similar() {
        let depth = 4.0;
        let pose = Pose3D::new(
            canonical_standing()
                .rows()
                .iter()
                .map(|r| [r[0], r[1], depth])
                .collect(),
        )
        .unwrap();
        let config = ProjectionConfig::default();
        let projected = project_to_2d(&pose, &config).unwrap();
        for (row3, row2) in pose.rows().iter().zip(projected.rows()) {
            assert_relative_eq!(row2[0], row3[0] / depth, epsilon = 1e-12);
            assert_relative_eq!(row2[1], row3[1] / depth, epsilon = 1e-12);
        }
    }

    #[test]
    fn doubling_depth_halves_weak_perspective_output() {
        let pose = Pose3D::new(
            canonical_standing()
                .rows()
                .iter()
                .map(|r| [r[0], r[1], r[2] + 5.0])
                .collect(),
        )
        .unwrap();
        let doubled = Pose3D::new(
            pose.rows()
                .iter()
                .map(|r| [r[0], r[1], r[2] * 2.0])
                .collect(),
        )
        .unwrap();
        let config = ProjectionConfig::default();
        let a = project_to_2d(&pose, &config).unwrap();
        let b = project_to_2d(&doubled, &config).unwrap();
        for (ra, rb) in a.rows().iter().zip(b.rows()) {
            assert_relative_eq!(rb[0], ra[0] / 2.0, epsilon = 1e-12);
            assert_relative_eq!(rb[1], ra[1] / 2.0, epsilon = 1e-12);
        }
        // the factor cancels in the normalized vector form
        let skeleton = crate::skeleton::Skeleton::h36m17();
        let va = a.normalized_vector(&skeleton).unwrap();
        let vb = b.normalized_vector(&skeleton).unwrap();
        for (x, y) in va.iter().zip(&vb) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn pinhole_rejects_joints_behind_camera() {
        let mut rows = canonical_standing().rows().to_vec();
        for r in &mut rows {
            r[2] += 5.0;
        }
        rows[3][2] = -0.5;
        let pose = Pose3D::new(rows).unwrap();
        let config = ProjectionConfig::Pinhole { focal_length: 1.0 };
        assert!(matches!(
            project_to_2d(&pose, &config).unwrap_err(),
            ProjectionError::BehindCamera { joint: 3, .. }
        ));
    }

    #[test]
    fn nonpositive_focal_rejected() {
        let config = ProjectionConfig::Pinhole { focal_length: 0.0 };
        assert_eq!(
            config.validate().unwrap_err(),
            ProjectionError::NonPositiveFocal(0.0)
        );
    }
}
