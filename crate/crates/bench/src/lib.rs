//! Shared fixtures for the criterion benchmarks.

use posediv_core::novel_set::{NovelPoseSet, NovelSetConfig, SetProvenance};
use posediv_core::pipeline::BinaryMask;
use posediv_core::pose::Pose3D;
use posediv_core::skeleton::Skeleton;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_pose(rng: &mut ChaCha8Rng) -> Pose3D {
    Pose3D::new(
        (0..17)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect(),
    )
    .expect("random pose is valid")
}

pub fn random_set(seed: u64, size: usize) -> NovelPoseSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NovelPoseSet::from_poses(
        Skeleton::h36m17(),
        NovelSetConfig::default(),
        SetProvenance::default(),
        (0..size).map(|_| random_pose(&mut rng)).collect(),
    )
    .expect("random set is valid")
}

pub fn random_mask(seed: u64, width: usize, height: usize) -> BinaryMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..width * height).map(|_| rng.gen_bool(0.3)).collect();
    BinaryMask::from_bits(width, height, bits).expect("dimensions are valid")
}
