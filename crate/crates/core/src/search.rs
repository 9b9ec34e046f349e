//! Progressive pose search: the optimal bounded-length sequence of
//! intermediate target poses minimizing the sum of k-th powers of
//! consecutive pose distances, found by recursive enumeration with a
//! candidate-pruning inequality, plus an exhaustive oracle for equivalence
//! testing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{project_to_2d, transform_to_camera, CameraPose, ProjectionConfig};
use crate::metric::{pose_distance_2d_vs_3d, pose_distance_3d, MetricError};
use crate::novel_set::NovelPoseSet;
use crate::pose::{Pose2D, Pose3D};
use crate::skeleton::world_up;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("novel pose set is empty")]
    EmptySet,
    #[error("final target index {index} out of range for set of {len}")]
    FinalOutOfRange { index: usize, len: usize },
    #[error("anchor member index {index} out of range for set of {len}")]
    AnchorOutOfRange { index: usize, len: usize },
    #[error("cannot select {count} targets from a set of {len}")]
    CountExceedsSet { count: usize, len: usize },
    #[error("exhaustive enumeration of {total} sequences exceeds the guard of {guard}")]
    EnumerationGuard { total: u128, guard: u128 },
    #[error("distance exponent k must be at least 1")]
    ZeroExponent,
    #[error("maximum sequence length must be at least 1")]
    ZeroLength,
    #[error("finals_per_source must be at least 1")]
    ZeroFinals,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Distance regime for recursion levels below the first. The first level
/// always compares the search anchor itself against set members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeepRegime {
    /// Compare set members directly as ground-view 3D poses.
    #[default]
    ThreeD,
    /// Project the previous member into the source camera view and compare
    /// in the image plane. Falls back to 3D when the anchor has no camera.
    Projected2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Exponent applied to each consecutive distance in the objective.
    pub k: u32,
    /// Maximum number of poses in a target sequence.
    pub n_max: usize,
    /// Final targets drawn per source image.
    pub finals_per_source: usize,
    pub deep_regime: DeepRegime,
    /// Candidate pruning can be disabled to cross-check that it never
    /// changes the result.
    pub pruning: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            k: 2,
            n_max: 3,
            finals_per_source: 5,
            deep_regime: DeepRegime::ThreeD,
            pruning: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.k == 0 {
            return Err(SearchError::ZeroExponent);
        }
        if self.n_max == 0 {
            return Err(SearchError::ZeroLength);
        }
        if self.finals_per_source == 0 {
            return Err(SearchError::ZeroFinals);
        }
        Ok(())
    }
}

/// Starting point of a search.
#[derive(Debug, Clone, Copy)]
pub enum SearchAnchor<'a> {
    /// Estimated 2D pose of a source image together with its camera; level-0
    /// distances use the 2D-vs-3D regime.
    Image {
        pose: &'a Pose2D,
        camera: &'a CameraPose,
    },
    /// A ground-view 3D pose that is not a set member.
    Ground(&'a Pose3D),
    /// A set member by index.
    Member(usize),
}

/// Optimal sequence of intermediate target poses ending at the chosen final
/// target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPoseSequence {
    pub objective: f64,
    /// Set indices of the sequence poses; the last one is the final target.
    pub member_indices: Vec<usize>,
    pub poses: Vec<Pose3D>,
    pub source_ref: Option<String>,
}

impl TargetPoseSequence {
    fn from_indices(set: &NovelPoseSet, objective: f64, member_indices: Vec<usize>) -> Self {
        let poses = member_indices
            .iter()
            .map(|&i| set.pose(i).clone())
            .collect();
        Self {
            objective,
            member_indices,
            poses,
            source_ref: None,
        }
    }

    pub fn with_source_ref(mut self, source_ref: impl Into<String>) -> Self {
        self.source_ref = Some(source_ref.into());
        self
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    pub fn final_index(&self) -> usize {
        *self.member_indices.last().expect("sequence is never empty")
    }
}

/// Uniform sample of `count` distinct member indices, deterministic per rng
/// stream.
pub fn select_final_target_indices<R: rand::Rng + ?Sized>(
    set: &NovelPoseSet,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>, SearchError> {
    if count > set.len() {
        return Err(SearchError::CountExceedsSet {
            count,
            len: set.len(),
        });
    }
    let mut indices: Vec<usize> = (0..set.len()).collect();
    for i in 0..count {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    indices.truncate(count);
    Ok(indices)
}

/// As [`select_final_target_indices`], returning the poses themselves.
pub fn select_final_targets<R: rand::Rng + ?Sized>(
    set: &NovelPoseSet,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Pose3D>, SearchError> {
    Ok(select_final_target_indices(set, count, rng)?
        .into_iter()
        .map(|i| set.pose(i).clone())
        .collect())
}

#[derive(Clone, Copy)]
enum LevelAnchor<'a> {
    Top(&'a SearchAnchor<'a>),
    Member(usize),
}

struct SearchSpace<'a> {
    set: &'a NovelPoseSet,
    projection: &'a ProjectionConfig,
    config: &'a SearchConfig,
    camera: Option<&'a CameraPose>,
}

impl<'a> SearchSpace<'a> {
    fn member_index(anchor: &LevelAnchor) -> Option<usize> {
        match anchor {
            LevelAnchor::Member(i) => Some(*i),
            LevelAnchor::Top(SearchAnchor::Member(i)) => Some(*i),
            _ => None,
        }
    }

    fn distance(&self, anchor: &LevelAnchor, member: usize) -> Result<f64, SearchError> {
        let skeleton = self.set.skeleton();
        let target = self.set.pose(member);
        match anchor {
            LevelAnchor::Top(SearchAnchor::Image { pose, camera }) => Ok(pose_distance_2d_vs_3d(
                pose,
                target,
                camera,
                self.projection,
                skeleton,
            )?),
            LevelAnchor::Top(SearchAnchor::Ground(pose)) => {
                Ok(pose_distance_3d(pose, target, skeleton, &world_up())?)
            }
            LevelAnchor::Top(SearchAnchor::Member(i)) | LevelAnchor::Member(i) => {
                let previous = self.set.pose(*i);
                match (self.config.deep_regime, self.camera) {
                    (DeepRegime::Projected2D, Some(camera)) => {
                        let in_camera =
                            transform_to_camera(previous, camera).map_err(MetricError::from)?;
                        let projected = project_to_2d(&in_camera, self.projection)
                            .map_err(MetricError::from)?;
                        Ok(pose_distance_2d_vs_3d(
                            &projected,
                            target,
                            camera,
                            self.projection,
                            skeleton,
                        )?)
                    }
                    _ => Ok(pose_distance_3d(previous, target, skeleton, &world_up())?),
                }
            }
        }
    }

    /// One recursion level: baseline is the direct hop to the final target;
    /// scanning the set (optionally pruned) may strictly improve it.
    fn level(
        &self,
        anchor: LevelAnchor,
        final_index: usize,
        budget: usize,
    ) -> Result<(f64, Vec<usize>), SearchError> {
        if Self::member_index(&anchor) == Some(final_index) {
            return Ok((0.0, Vec::new()));
        }
        let k = self.config.k as i32;
        let to_final = self.distance(&anchor, final_index)?;
        let mut best_objective = to_final.powi(k);
        let mut best_sequence = vec![final_index];
        if budget == 1 {
            return Ok((best_objective, best_sequence));
        }
        for index in 0..self.set.len() {
            let hop = self.distance(&anchor, index)?;
            // a candidate farther from the anchor than the final target can
            // never improve on the direct hop
            let candidate = hop <= to_final;
            if self.config.pruning && !candidate {
                continue;
            }
            let (rest, rest_sequence) =
                self.level(LevelAnchor::Member(index), final_index, budget - 1)?;
            let objective = hop.powi(k) + rest;
            if objective < best_objective {
                best_objective = objective;
                best_sequence = Vec::with_capacity(1 + rest_sequence.len());
                best_sequence.push(index);
                best_sequence.extend(rest_sequence);
            }
        }
        Ok((best_objective, best_sequence))
    }
}

fn check_inputs(
    anchor: &SearchAnchor,
    final_index: usize,
    set: &NovelPoseSet,
    config: &SearchConfig,
) -> Result<(), SearchError> {
    config.validate()?;
    if set.is_empty() {
        return Err(SearchError::EmptySet);
    }
    if final_index >= set.len() {
        return Err(SearchError::FinalOutOfRange {
            index: final_index,
            len: set.len(),
        });
    }
    if let SearchAnchor::Member(i) = anchor {
        if *i >= set.len() {
            return Err(SearchError::AnchorOutOfRange {
                index: *i,
                len: set.len(),
            });
        }
    }
    Ok(())
}

fn space<'a>(
    anchor: &'a SearchAnchor<'a>,
    set: &'a NovelPoseSet,
    projection: &'a ProjectionConfig,
    config: &'a SearchConfig,
) -> SearchSpace<'a> {
    let camera = match anchor {
        SearchAnchor::Image { camera, .. } => Some(*camera),
        _ => None,
    };
    SearchSpace {
        set,
        projection,
        config,
        camera,
    }
}

/// Recursive optimal search for the target pose sequence ending at
/// `final_index`, with at most `config.n_max` poses.
pub fn progressive_search(
    anchor: &SearchAnchor,
    final_index: usize,
    set: &NovelPoseSet,
    projection: &ProjectionConfig,
    config: &SearchConfig,
) -> Result<TargetPoseSequence, SearchError> {
    check_inputs(anchor, final_index, set, config)?;
    let space = space(anchor, set, projection, config);
    let (objective, indices) = space.level(LevelAnchor::Top(anchor), final_index, config.n_max)?;
    if indices.is_empty() {
        // anchor was already the final target
        return Ok(TargetPoseSequence {
            objective,
            member_indices: Vec::new(),
            poses: Vec::new(),
            source_ref: None,
        });
    }
    Ok(TargetPoseSequence::from_indices(set, objective, indices))
}

/// Members no farther from the anchor than the final target is; the final
/// target itself always qualifies.
pub fn candidate_filter(
    anchor: &SearchAnchor,
    final_index: usize,
    set: &NovelPoseSet,
    projection: &ProjectionConfig,
    config: &SearchConfig,
) -> Result<Vec<usize>, SearchError> {
    check_inputs(anchor, final_index, set, config)?;
    let space = space(anchor, set, projection, config);
    let level_anchor = LevelAnchor::Top(anchor);
    let to_final = space.distance(&level_anchor, final_index)?;
    let mut kept = Vec::new();
    for index in 0..set.len() {
        if space.distance(&level_anchor, index)? <= to_final {
            kept.push(index);
        }
    }
    Ok(kept)
}

const ENUMERATION_GUARD: u128 = 1_000_000;

/// Exhaustive oracle: enumerate every sequence of length `1..=n_max` over the
/// set that ends at the final target, evaluate the objective directly, and
/// return the global minimizer (ties broken by lexicographically smallest
/// index sequence).
pub fn brute_force_search(
    anchor: &SearchAnchor,
    final_index: usize,
    set: &NovelPoseSet,
    projection: &ProjectionConfig,
    config: &SearchConfig,
) -> Result<TargetPoseSequence, SearchError> {
    check_inputs(anchor, final_index, set, config)?;
    let n = set.len() as u128;
    let mut total: u128 = 0;
    for length in 1..=config.n_max {
        total = total.saturating_add(n.saturating_pow(length as u32 - 1));
        if total > ENUMERATION_GUARD {
            return Err(SearchError::EnumerationGuard {
                total,
                guard: ENUMERATION_GUARD,
            });
        }
    }
    let space = space(anchor, set, projection, config);
    if SearchSpace::member_index(&LevelAnchor::Top(anchor)) == Some(final_index) {
        return Ok(TargetPoseSequence {
            objective: 0.0,
            member_indices: Vec::new(),
            poses: Vec::new(),
            source_ref: None,
        });
    }

    let k = config.k as i32;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut sequence = Vec::new();
    for length in 1..=config.n_max {
        let mut prefix = vec![0usize; length - 1];
        loop {
            sequence.clear();
            sequence.extend_from_slice(&prefix);
            sequence.push(final_index);

            // fold the objective from the back so the float associativity
            // matches the recursive search exactly
            let mut objective = 0.0;
            for position in (0..sequence.len()).rev() {
                let previous = if position == 0 {
                    LevelAnchor::Top(anchor)
                } else {
                    LevelAnchor::Member(sequence[position - 1])
                };
                let hop = space.distance(&previous, sequence[position])?.powi(k);
                objective = if position == sequence.len() - 1 {
                    hop
                } else {
                    hop + objective
                };
            }

            let better = match &best {
                None => true,
                Some((best_objective, best_sequence)) => {
                    objective < *best_objective
                        || (objective == *best_objective && sequence < *best_sequence)
                }
            };
            if better {
                best = Some((objective, sequence.clone()));
            }

            // odometer over the prefix positions
            let mut position = length - 1;
            loop {
                if position == 0 {
                    break;
                }
                let slot = position - 1;
                prefix[slot] += 1;
                if prefix[slot] < set.len() {
                    break;
                }
                prefix[slot] = 0;
                position -= 1;
            }
            if position == 0 {
                break;
            }
        }
    }
    let (objective, indices) = best.expect("at least the direct sequence is enumerated");
    Ok(TargetPoseSequence::from_indices(set, objective, indices))
}
