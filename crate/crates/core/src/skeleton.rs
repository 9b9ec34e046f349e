//! Skeleton conventions: joint ordering, landmark indices, and the subset of
//! joints consumed by image translators.

use nalgebra::Vector3;
use thiserror::Error;

use crate::pose::Pose3D;

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("skeleton must have exactly {expected} joints, got {got}")]
    JointCount { expected: usize, got: usize },
    #[error("joint index {index} out of range for {count} joints")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("landmark indices (nose, neck, root) must be distinct")]
    DuplicateLandmark,
    #[error("translator subset must have exactly {expected} distinct entries")]
    BadTranslatorSubset { expected: usize },
}

/// Number of joints in the 17-keypoint convention used throughout.
pub const JOINT_COUNT: usize = 17;
/// Number of joints consumed by the downstream image translator.
pub const TRANSLATOR_JOINT_COUNT: usize = 14;

/// World up axis for ground-view poses (y-up).
pub fn world_up() -> Vector3<f64> {
    Vector3::y()
}

/// Joint naming and landmark indices for a fixed-order keypoint layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joint_names: Vec<&'static str>,
    index_of_nose: usize,
    index_of_neck: usize,
    index_of_root: usize,
    translator_subset: Vec<usize>,
}

impl Skeleton {
    pub fn new(
        joint_names: Vec<&'static str>,
        index_of_nose: usize,
        index_of_neck: usize,
        index_of_root: usize,
        translator_subset: Vec<usize>,
    ) -> Result<Self, SkeletonError> {
        let count = joint_names.len();
        if count != JOINT_COUNT {
            return Err(SkeletonError::JointCount {
                expected: JOINT_COUNT,
                got: count,
            });
        }
        for &index in [index_of_nose, index_of_neck, index_of_root]
            .iter()
            .chain(translator_subset.iter())
        {
            if index >= count {
                return Err(SkeletonError::IndexOutOfRange { index, count });
            }
        }
        if index_of_nose == index_of_neck
            || index_of_nose == index_of_root
            || index_of_neck == index_of_root
        {
            return Err(SkeletonError::DuplicateLandmark);
        }
        let mut subset = translator_subset.clone();
        subset.sort_unstable();
        subset.dedup();
        if subset.len() != TRANSLATOR_JOINT_COUNT
            || translator_subset.len() != TRANSLATOR_JOINT_COUNT
        {
            return Err(SkeletonError::BadTranslatorSubset {
                expected: TRANSLATOR_JOINT_COUNT,
            });
        }
        Ok(Self {
            joint_names,
            index_of_nose,
            index_of_neck,
            index_of_root,
            translator_subset,
        })
    }

    /// The 17-joint layout (pelvis-rooted, y-up) with the 14-joint
    /// limbs-and-head subset used by the translator.
    pub fn h36m17() -> Self {
        Self::new(
            vec![
                "pelvis",
                "hip_right",
                "knee_right",
                "ankle_right",
                "hip_left",
                "knee_left",
                "ankle_left",
                "spine",
                "neck",
                "nose",
                "head",
                "shoulder_left",
                "elbow_left",
                "wrist_left",
                "shoulder_right",
                "elbow_right",
                "wrist_right",
            ],
            9, // nose
            8, // neck
            0, // pelvis
            // everything except pelvis, spine and nose
            vec![1, 2, 3, 4, 5, 6, 8, 10, 11, 12, 13, 14, 15, 16],
        )
        .expect("built-in skeleton is valid")
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[&'static str] {
        &self.joint_names
    }

    pub fn nose(&self) -> usize {
        self.index_of_nose
    }

    pub fn neck(&self) -> usize {
        self.index_of_neck
    }

    pub fn root(&self) -> usize {
        self.index_of_root
    }

    pub fn translator_subset(&self) -> &[usize] {
        &self.translator_subset
    }
}

/// Canonical upright pose: pelvis near the origin, facing +z, roughly 1.7 in
/// skeletal units. Nose sits slightly forward of the neck so the facing
/// direction is well defined.
pub fn canonical_standing() -> Pose3D {
    Pose3D::new(vec![
        [0.0, 0.95, 0.0],   // pelvis
        [-0.12, 0.91, 0.0], // hip_right
        [-0.13, 0.49, 0.0], // knee_right
        [-0.14, 0.08, 0.0], // ankle_right
        [0.12, 0.91, 0.0],  // hip_left
        [0.13, 0.49, 0.0],  // knee_left
        [0.14, 0.08, 0.0],  // ankle_left
        [0.0, 1.20, 0.02],  // spine
        [0.0, 1.42, 0.0],   // neck
        [0.0, 1.58, 0.09],  // nose
        [0.0, 1.68, 0.02],  // head
        [0.19, 1.41, 0.0],  // shoulder_left
        [0.24, 1.12, 0.0],  // elbow_left
        [0.26, 0.85, 0.0],  // wrist_left
        [-0.19, 1.41, 0.0], // shoulder_right
        [-0.24, 1.12, 0.0], // elbow_right
        [-0.26, 0.85, 0.0], // wrist_right
    ])
    .expect("canonical pose is valid")
}

/// Canonical crouched pose with arms reaching forward; far from
/// [`canonical_standing`] under the pose metric, used as a second mode in
/// toy training distributions.
pub fn canonical_crouch() -> Pose3D {
    Pose3D::new(vec![
        [0.0, 0.52, 0.0],    // pelvis
        [-0.12, 0.50, 0.0],  // hip_right
        [-0.16, 0.28, 0.22], // knee_right
        [-0.15, 0.06, 0.02], // ankle_right
        [0.12, 0.50, 0.0],   // hip_left
        [0.16, 0.28, 0.22],  // knee_left
        [0.15, 0.06, 0.02],  // ankle_left
        [0.0, 0.74, 0.08],   // spine
        [0.0, 0.94, 0.14],   // neck
        [0.0, 1.05, 0.26],   // nose
        [0.0, 1.16, 0.18],   // head
        [0.19, 0.92, 0.14],  // shoulder_left
        [0.23, 0.80, 0.38],  // elbow_left
        [0.24, 0.72, 0.62],  // wrist_left
        [-0.19, 0.92, 0.14], // shoulder_right
        [-0.23, 0.80, 0.38], // elbow_right
        [-0.24, 0.72, 0.62], // wrist_right
    ])
    .expect("canonical pose is valid")
}
