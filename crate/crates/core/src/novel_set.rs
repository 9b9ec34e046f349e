//! Diversity-constrained novel pose set built by rejection sampling: a
//! candidate joins only if no existing member is closer than the similarity
//! threshold.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{pose_distance_3d, MetricError};
use crate::pose::Pose3D;
use crate::skeleton::{world_up, Skeleton};

#[derive(Debug, Error)]
pub enum NovelSetError {
    #[error("n_pos must be at least 1")]
    ZeroTarget,
    #[error("t_sim must lie in (0, 2), got {0}")]
    ThresholdOutOfRange(f64),
    #[error("max_attempts must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("pose generator failed: {0}")]
    Generator(String),
    #[error(
        "rejection budget exhausted: {attempts} consecutive rejections with {reached} of {target} poses admitted (t_sim likely too high for this generator)"
    )]
    BudgetExhausted {
        attempts: usize,
        reached: usize,
        target: usize,
        partial: Box<NovelPoseSet>,
    },
    #[error("need at least 2 poses, set has {0}")]
    TooFewPoses(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NovelSetConfig {
    /// Target set size.
    pub n_pos: usize,
    /// Minimum pairwise pose distance admitted into the set.
    pub t_sim: f64,
    /// Consecutive rejections tolerated before giving up on one admission.
    pub max_attempts: usize,
}

impl Default for NovelSetConfig {
    fn default() -> Self {
        Self {
            n_pos: 1000,
            t_sim: 0.24,
            max_attempts: 1000,
        }
    }
}

impl NovelSetConfig {
    pub fn validate(&self) -> Result<(), NovelSetError> {
        if self.n_pos == 0 {
            return Err(NovelSetError::ZeroTarget);
        }
        if !self.t_sim.is_finite() || self.t_sim <= 0.0 || self.t_sim >= 2.0 {
            return Err(NovelSetError::ThresholdOutOfRange(self.t_sim));
        }
        if self.max_attempts == 0 {
            return Err(NovelSetError::ZeroBudget);
        }
        Ok(())
    }
}

/// Where a set's poses came from, carried along when the set is persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SetProvenance {
    pub seed: u64,
    pub schedule_id: String,
}

/// Ordered collection of ground-view 3D poses with every pairwise distance
/// at least `t_sim`.
#[derive(Debug, Clone)]
pub struct NovelPoseSet {
    skeleton: Skeleton,
    config: NovelSetConfig,
    provenance: SetProvenance,
    poses: Vec<Pose3D>,
}

impl NovelPoseSet {
    pub fn new(
        skeleton: Skeleton,
        config: NovelSetConfig,
        provenance: SetProvenance,
    ) -> Result<Self, NovelSetError> {
        config.validate()?;
        Ok(Self {
            skeleton,
            config,
            provenance,
            poses: Vec::new(),
        })
    }

    /// Rebuild a set from already-admitted poses (e.g. read back from disk).
    /// The pairwise invariant is NOT re-checked here; use
    /// [`NovelPoseSet::min_pairwise_distance`] to audit.
    pub fn from_poses(
        skeleton: Skeleton,
        config: NovelSetConfig,
        provenance: SetProvenance,
        poses: Vec<Pose3D>,
    ) -> Result<Self, NovelSetError> {
        config.validate()?;
        Ok(Self {
            skeleton,
            config,
            provenance,
            poses,
        })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn poses(&self) -> &[Pose3D] {
        &self.poses
    }

    pub fn pose(&self, index: usize) -> &Pose3D {
        &self.poses[index]
    }

    pub fn config(&self) -> &NovelSetConfig {
        &self.config
    }

    pub fn provenance(&self) -> &SetProvenance {
        &self.provenance
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    fn up(&self) -> Vector3<f64> {
        world_up()
    }

    /// Admit `candidate` iff its distance to every member is at least
    /// `t_sim`; the existing member is the anchor of each comparison.
    /// Returns whether the candidate was appended.
    pub fn admit(&mut self, candidate: &Pose3D) -> Result<bool, NovelSetError> {
        for member in &self.poses {
            let distance = pose_distance_3d(member, candidate, &self.skeleton, &self.up())?;
            if distance < self.config.t_sim {
                return Ok(false);
            }
        }
        self.poses.push(candidate.clone());
        Ok(true)
    }

    /// Exact minimum over all unordered pairs of member distances.
    pub fn min_pairwise_distance(&self) -> Result<f64, NovelSetError> {
        if self.poses.len() < 2 {
            return Err(NovelSetError::TooFewPoses(self.poses.len()));
        }
        let mut min = f64::INFINITY;
        for i in 0..self.poses.len() {
            for j in (i + 1)..self.poses.len() {
                let d =
                    pose_distance_3d(&self.poses[i], &self.poses[j], &self.skeleton, &self.up())?;
                if d < min {
                    min = d;
                }
            }
        }
        Ok(min)
    }

    /// Histogram of pairwise distances over `[0, 2]` split into `buckets`
    /// equal bins (diagnostic for run statistics).
    pub fn distance_histogram(&self, buckets: usize) -> Result<Vec<usize>, NovelSetError> {
        let buckets = buckets.max(1);
        let mut counts = vec![0usize; buckets];
        for i in 0..self.poses.len() {
            for j in (i + 1)..self.poses.len() {
                let d =
                    pose_distance_3d(&self.poses[i], &self.poses[j], &self.skeleton, &self.up())?;
                let bin = ((d / 2.0) * buckets as f64).floor() as usize;
                counts[bin.min(buckets - 1)] += 1;
            }
        }
        Ok(counts)
    }
}

/// Draw poses from `generator` until the set holds `n_pos` members, giving up
/// after `max_attempts` consecutive rejections. On exhaustion the partial set
/// is carried inside the error.
pub fn build_novel_set<R, G, E>(
    mut generator: G,
    skeleton: Skeleton,
    config: NovelSetConfig,
    provenance: SetProvenance,
    rng: &mut R,
) -> Result<NovelPoseSet, NovelSetError>
where
    G: FnMut(&mut R) -> Result<Pose3D, E>,
    E: std::fmt::Display,
{
    let mut set = NovelPoseSet::new(skeleton, config, provenance)?;
    let mut consecutive_rejections = 0;
    while set.len() < config.n_pos {
        let candidate = generator(rng).map_err(|e| NovelSetError::Generator(e.to_string()))?;
        if set.admit(&candidate)? {
            consecutive_rejections = 0;
        } else {
            consecutive_rejections += 1;
            if consecutive_rejections >= config.max_attempts {
                let reached = set.len();
                return Err(NovelSetError::BudgetExhausted {
                    attempts: consecutive_rejections,
                    reached,
                    target: config.n_pos,
                    partial: Box::new(set),
                });
            }
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::canonical_standing;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::convert::Infallible;

    fn random_unit_pose(rng: &mut ChaCha8Rng) -> Pose3D {
        let rows = (0..17)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        Pose3D::new(rows).unwrap()
    }

    fn empty_set(t_sim: f64) -> NovelPoseSet {
        NovelPoseSet::new(
            Skeleton::h36m17(),
            NovelSetConfig {
                n_pos: 1000,
                t_sim,
                max_attempts: 100,
            },
            SetProvenance::default(),
        )
        .unwrap()
    }

    #[test]
    fn empty_set_accepts_any_valid_pose() {
        let mut set = empty_set(0.24);
        assert!(set.admit(&canonical_standing()).unwrap());
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn duplicate_member_rejected() {
        let mut set = empty_set(0.24);
        set.admit(&canonical_standing()).unwrap();
        assert!(!set.admit(&canonical_standing()).unwrap());
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn admission_matches_brute_force_threshold() {
        // build a small set, then check candidates near the threshold against
        // an explicit minimum-distance computation
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut set = empty_set(0.24);
        for _ in 0..3 {
            let pose = random_unit_pose(&mut rng);
            set.admit(&pose).unwrap();
        }
        let skeleton = Skeleton::h36m17();
        for _ in 0..50 {
            let candidate = random_unit_pose(&mut rng);
            let min: f64 = set
                .poses()
                .iter()
                .map(|m| pose_distance_3d(m, &candidate, &skeleton, &world_up()).unwrap())
                .fold(f64::INFINITY, f64::min);
            let mut probe = set.clone();
            let accepted = probe.admit(&candidate).unwrap();
            assert_eq!(accepted, min >= 0.24, "min distance {min}");
        }
    }

    /// Interpolate toward a far pose until the measured distance to `from`
    /// hits `target` (bisection on the mixing parameter).
    fn pose_at_distance(from: &Pose3D, far: &Pose3D, target: f64) -> Pose3D {
        let skeleton = Skeleton::h36m17();
        let blend = |t: f64| -> Pose3D {
            Pose3D::new(
                from.rows()
                    .iter()
                    .zip(far.rows())
                    .map(|(a, b)| {
                        [
                            a[0] + t * (b[0] - a[0]),
                            a[1] + t * (b[1] - a[1]),
                            a[2] + t * (b[2] - a[2]),
                        ]
                    })
                    .collect(),
            )
            .unwrap()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let d = pose_distance_3d(from, &blend(mid), &skeleton, &world_up()).unwrap();
            if d < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        blend(0.5 * (lo + hi))
    }

    #[test]
    fn candidate_just_above_threshold_accepted_just_below_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let member = random_unit_pose(&mut rng);
        let far = random_unit_pose(&mut rng);
        let skeleton = Skeleton::h36m17();

        for (target, expect_accept) in [(0.25, true), (0.23, false)] {
            let candidate = pose_at_distance(&member, &far, target);
            let measured = pose_distance_3d(&member, &candidate, &skeleton, &world_up()).unwrap();
            assert!(
                (measured - target).abs() < 1e-6,
                "bisection off: {measured}"
            );
            let mut set = empty_set(0.24);
            set.admit(&member).unwrap();
            assert_eq!(set.admit(&candidate).unwrap(), expect_accept);
        }
    }

    #[test]
    fn constant_generator_exhausts_budget_with_partial_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let result = build_novel_set(
            |_: &mut ChaCha8Rng| Ok::<_, Infallible>(canonical_standing()),
            Skeleton::h36m17(),
            NovelSetConfig {
                n_pos: 2,
                t_sim: 0.24,
                max_attempts: 10,
            },
            SetProvenance::default(),
            &mut rng,
        );
        match result {
            Err(NovelSetError::BudgetExhausted {
                attempts,
                reached,
                partial,
                ..
            }) => {
                assert_eq!(attempts, 10);
                assert_eq!(reached, 1);
                assert_eq!(partial.len(), 1);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn single_pose_target_returns_first_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = build_novel_set(
            |r: &mut ChaCha8Rng| Ok::<_, Infallible>(random_unit_pose(r)),
            Skeleton::h36m17(),
            NovelSetConfig {
                n_pos: 1,
                t_sim: 0.24,
                max_attempts: 10,
            },
            SetProvenance::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(set.len(), 1);
        let mut replay = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(set.pose(0), &random_unit_pose(&mut replay));
    }

    #[test]
    fn built_set_satisfies_pairwise_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let set = build_novel_set(
            |r: &mut ChaCha8Rng| Ok::<_, Infallible>(random_unit_pose(r)),
            Skeleton::h36m17(),
            NovelSetConfig {
                n_pos: 50,
                t_sim: 0.24,
                max_attempts: 1000,
            },
            SetProvenance::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(set.len(), 50);
        // exhaustive pairwise check, independent of admit's scan
        let skeleton = Skeleton::h36m17();
        for i in 0..set.len() {
            for j in (i + 1)..set.len() {
                let d = pose_distance_3d(set.pose(i), set.pose(j), &skeleton, &world_up()).unwrap();
                assert!(d >= 0.24, "pair ({i},{j}) at distance {d}");
            }
        }
        assert!(set.min_pairwise_distance().unwrap() >= 0.24);
    }

    #[test]
    fn min_pairwise_matches_brute_force_and_needs_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut set = empty_set(0.1);
        while set.len() < 10 {
            let _ = set.admit(&random_unit_pose(&mut rng)).unwrap();
        }
        let skeleton = Skeleton::h36m17();
        let mut brute = f64::INFINITY;
        for i in 0..10 {
            for j in (i + 1)..10 {
                brute = brute.min(
                    pose_distance_3d(set.pose(i), set.pose(j), &skeleton, &world_up()).unwrap(),
                );
            }
        }
        assert_eq!(set.min_pairwise_distance().unwrap(), brute);

        let single = empty_set(0.1);
        assert!(matches!(
            single.min_pairwise_distance().unwrap_err(),
            NovelSetError::TooFewPoses(0)
        ));
    }

    #[test]
    fn duplicate_pair_via_from_poses_has_zero_min_distance() {
        let set = NovelPoseSet::from_poses(
            Skeleton::h36m17(),
            NovelSetConfig::default(),
            SetProvenance::default(),
            vec![canonical_standing(), canonical_standing()],
        )
        .unwrap();
        assert!(set.min_pairwise_distance().unwrap() < 1e-9);
    }

    #[test]
    fn admission_order_may_change_membership_but_never_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let candidates: Vec<Pose3D> = (0..40).map(|_| random_unit_pose(&mut rng)).collect();
        for shuffle_seed in 0..5u64 {
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            let mut shuffle_rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
            for i in (1..order.len()).rev() {
                let j = shuffle_rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let mut set = empty_set(0.9);
            for &index in &order {
                let _ = set.admit(&candidates[index]).unwrap();
            }
            assert!(set.len() >= 2);
            assert!(set.min_pairwise_distance().unwrap() >= 0.9);
        }
    }

    #[test]
    fn higher_threshold_never_reaches_larger_size() {
        // monotone difficulty: under a fixed budget the achievable size is
        // non-increasing in t_sim (checked over a handful of seeds)
        let sizes = |t_sim: f64| -> usize {
            let mut total = 0;
            for seed in 0..5 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let built = build_novel_set(
                    |r: &mut ChaCha8Rng| Ok::<_, Infallible>(random_unit_pose(r)),
                    Skeleton::h36m17(),
                    NovelSetConfig {
                        n_pos: 60,
                        t_sim,
                        max_attempts: 40,
                    },
                    SetProvenance::default(),
                    &mut rng,
                );
                total += match built {
                    Ok(set) => set.len(),
                    Err(NovelSetError::BudgetExhausted { partial, .. }) => partial.len(),
                    Err(other) => panic!("unexpected error: {other}"),
                };
            }
            total
        };
        let easy = sizes(0.3);
        let medium = sizes(0.9);
        let hard = sizes(1.35);
        assert!(easy >= medium, "easy {easy} < medium {medium}");
        assert!(medium >= hard, "medium {medium} < hard {hard}");
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            NovelSetConfig {
                n_pos: 0,
                t_sim: 0.2,
                max_attempts: 1
            }
            .validate(),
            Err(NovelSetError::ZeroTarget)
        ));
        assert!(matches!(
            NovelSetConfig {
                n_pos: 1,
                t_sim: 2.5,
                max_attempts: 1
            }
            .validate(),
            Err(NovelSetError::ThresholdOutOfRange(_))
        ));
        assert!(matches!(
            NovelSetConfig {
                n_pos: 1,
                t_sim: 0.2,
                max_attempts: 0
            }
            .validate(),
            Err(NovelSetError::ZeroBudget)
        ));
    }
}
