//! Pose similarity metric with facing/camera alignment.
//!
//! The distance between two poses is `sqrt(2 * (1 - dot))` of their
//! normalized coordinate vectors, after the second pose has been transformed
//! so that both share a facing direction (and, when comparing a 2D pose
//! against a 3D one, a camera). The first argument is always the anchor: it
//! is never transformed.

use nalgebra::{Rotation3, Unit, Vector3};
use thiserror::Error;

use crate::camera::{
    project_to_2d, transform_to_camera, CameraError, CameraPose, ProjectionConfig, ProjectionError,
};
use crate::pose::{Pose2D, Pose3D, PoseError};
use crate::skeleton::Skeleton;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("facing direction undefined: neck-to-nose vector is parallel to up")]
    UndefinedFacing,
    #[error("up vector must be nonzero and finite")]
    BadUpVector,
}

/// Horizontal component of the neck-to-nose vector, as a unit vector
/// orthogonal to `up`.
pub fn facing_direction(
    pose: &Pose3D,
    skeleton: &Skeleton,
    up: &Vector3<f64>,
) -> Result<Unit<Vector3<f64>>, MetricError> {
    pose.check_skeleton(skeleton)?;
    if up.iter().any(|c| !c.is_finite()) || up.norm() == 0.0 {
        return Err(MetricError::BadUpVector);
    }
    let up = up.normalize();
    let gaze = pose.joint(skeleton.nose()) - pose.joint(skeleton.neck());
    let horizontal = gaze - up * gaze.dot(&up);
    let norm = horizontal.norm();
    if norm < 1e-12 {
        return Err(MetricError::UndefinedFacing);
    }
    Ok(Unit::new_unchecked(horizontal / norm))
}

/// Rotate `pose` about the up axis through its root joint so its facing
/// direction matches `reference`'s. Rigid (yaw only), so bone lengths are
/// preserved.
pub fn align_facing(
    pose: &Pose3D,
    reference: &Pose3D,
    skeleton: &Skeleton,
    up: &Vector3<f64>,
) -> Result<Pose3D, MetricError> {
    let from = facing_direction(pose, skeleton, up)?;
    let to = facing_direction(reference, skeleton, up)?;
    let axis = Unit::new_normalize(*up);
    // signed yaw from `from` to `to` around the up axis
    let angle = from.cross(&to).dot(&axis).atan2(from.dot(&to));
    let rotation = Rotation3::from_axis_angle(&axis, angle);
    let pivot = pose.joint(skeleton.root());
    let joints = pose
        .iter()
        .map(|joint| pivot + rotation * (joint - pivot))
        .collect();
    Ok(Pose3D::from_vectors(joints).expect("rotation preserves validity"))
}

/// `sqrt(2 * (1 - a . b))` for unit vectors, evaluated as the difference
/// norm `||a - b||`. The two are algebraically equal, but the dot-product
/// form loses ~8 digits near zero while this one is exact for identical
/// inputs. Clamped against float excursions above 2.
fn chord_distance(a: &[f64], b: &[f64]) -> f64 {
    let diff_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    diff_sq.sqrt().clamp(0.0, 2.0)
}

/// Distance between two ground-view 3D poses. The second pose is yaw-aligned
/// to the anchor's facing direction before comparison; no camera transform is
/// applied because both poses are assumed to share a ground-level camera.
pub fn pose_distance_3d(
    anchor: &Pose3D,
    other: &Pose3D,
    skeleton: &Skeleton,
    up: &Vector3<f64>,
) -> Result<f64, MetricError> {
    let aligned = align_facing(other, anchor, skeleton, up)?;
    let a = anchor.normalized_vector(skeleton)?;
    let b = aligned.normalized_vector(skeleton)?;
    Ok(chord_distance(&a, &b))
}

/// Distance between an image-space 2D pose (anchor) and a ground-view 3D
/// pose. The 3D pose is expressed in the anchor's camera frame, yaw-aligned
/// to the anchor's facing as seen in the image plane, projected, and then
/// compared in 2D.
pub fn pose_distance_2d_vs_3d(
    anchor: &Pose2D,
    other: &Pose3D,
    camera: &CameraPose,
    projection: &ProjectionConfig,
    skeleton: &Skeleton,
) -> Result<f64, MetricError> {
    let projected = transform_into_view(other, anchor, camera, projection, skeleton)?;
    pose_distance_2d(anchor, &projected, skeleton)
}

/// Distance between two image-space 2D poses of the same view; no transform
/// is applied and the result is symmetric in its arguments.
pub fn pose_distance_2d(
    anchor: &Pose2D,
    other: &Pose2D,
    skeleton: &Skeleton,
) -> Result<f64, MetricError> {
    let a = anchor.normalized_vector(skeleton)?;
    let b = other.normalized_vector(skeleton)?;
    Ok(chord_distance(&a, &b))
}

/// Express a ground-view 3D pose in the view of a 2D anchor pose: transform
/// into the anchor's camera frame, yaw-align to the anchor's image-plane
/// facing, and project.
///
/// A 2D pose only determines which lateral direction the subject faces in
/// the image (the sign of the neck-to-nose x component), so alignment here
/// is a half-turn about the camera up axis when that sign disagrees, and the
/// identity otherwise. A pose compared against its own projection therefore
/// comes out at distance zero.
pub fn transform_into_view(
    pose: &Pose3D,
    anchor: &Pose2D,
    camera: &CameraPose,
    projection: &ProjectionConfig,
    skeleton: &Skeleton,
) -> Result<Pose2D, MetricError> {
    anchor.check_skeleton(skeleton)?;
    let in_camera = transform_to_camera(pose, camera)?;
    let projected = project_to_2d(&in_camera, projection)?;
    let anchor_dx = lateral_facing(anchor, skeleton)?;
    let pose_dx = lateral_facing(&projected, skeleton)?;
    if anchor_dx.signum() == pose_dx.signum() {
        return Ok(projected);
    }
    let rotation =
        Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::y()), std::f64::consts::PI);
    let pivot = in_camera.joint(skeleton.root());
    let flipped = Pose3D::from_vectors(
        in_camera
            .iter()
            .map(|joint| pivot + rotation * (joint - pivot))
            .collect(),
    )
    .expect("rotation preserves validity");
    Ok(project_to_2d(&flipped, projection)?)
}

/// Image-plane lateral component of the neck-to-nose vector. Zero means the
/// subject faces straight toward or away from the camera and its facing
/// cannot be determined from the image.
fn lateral_facing(pose: &Pose2D, skeleton: &Skeleton) -> Result<f64, MetricError> {
    let dx = pose.joint(skeleton.nose()).x - pose.joint(skeleton.neck()).x;
    if dx.abs() < 1e-12 {
        return Err(MetricError::UndefinedFacing);
    }
    Ok(dx)
}
