//! End-to-end orchestration: plan translation jobs against a novel pose set,
//! execute them through translator/estimator adapters, filter noisy outputs,
//! and post-process masks and placements.

pub mod adapter;
pub mod filter;
pub mod mask;
pub mod placement;

pub use adapter::{
    external_adapter_pair, mock_adapter_pair, AdapterError, EstimatorAdapter, ExternalEstimator,
    ExternalTranslator, MockEstimator, MockTranslator, StepRequest, TranslatorAdapter,
};
pub use filter::{exceeds_threshold, filter_noisy, FilterOutcome, FilteredStep, RejectReason};
pub use mask::{dilate, erode, extract_mask, morph_cleanup, BinaryMask, MaskError, Raster};
pub use placement::{
    place_single, place_with_occlusion, resize_factor, OcclusionRule, PlacedHuman, PlacementError,
    PlacementSpec, SizeEntry,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraPose, ProjectionConfig};
use crate::metric::transform_into_view;
use crate::novel_set::NovelPoseSet;
use crate::pose::Pose2D;
use crate::pose::Pose3D;
use crate::search::{
    progressive_search, select_final_target_indices, SearchAnchor, SearchConfig, SearchError,
};
use crate::seeding::{derive_indexed_seed, derive_seed};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no source records supplied")]
    NoSources,
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("manifest contains duplicate job id {0}")]
    DuplicateJob(String),
    #[error("source {source_ref}: {message}")]
    Source { source_ref: String, message: String },
}

/// One source image of the original synthetic dataset: its estimated 2D
/// pose, camera metadata, mask ref, and human bounding-box size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub image_ref: String,
    pub estimated_pose: Pose2D,
    pub camera: CameraPose,
    pub human_mask_ref: String,
    pub size_entry: SizeEntry,
}

impl SourceRecord {
    pub fn validate(&self, skeleton: &crate::skeleton::Skeleton) -> Result<(), PipelineError> {
        let fail = |message: String| PipelineError::Source {
            source_ref: self.image_ref.clone(),
            message,
        };
        self.estimated_pose
            .check_skeleton(skeleton)
            .map_err(|e| fail(e.to_string()))?;
        self.camera.basis().map_err(|e| fail(e.to_string()))?;
        self.size_entry
            .validate()
            .map_err(|e| fail(e.to_string()))?;
        Ok(())
    }
}

/// One step of a translation job: a target pose in both its ground-view 3D
/// form and its projection under the source camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStep {
    pub member_index: usize,
    pub target_pose_3d: Pose3D,
    pub target_pose_2d: Pose2D,
}

/// A planned cascade of translations for one (source, final target) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationJob {
    pub job_id: String,
    pub source_ref: String,
    pub sequence_index: usize,
    pub final_member_index: usize,
    pub seed: u64,
    pub objective: f64,
    pub steps: Vec<JobStep>,
}

/// All planned jobs for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationManifest {
    pub seed: u64,
    pub jobs: Vec<TranslationJob>,
}

impl TranslationManifest {
    /// Jobs must be unique by (source_ref, final target).
    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut seen = std::collections::BTreeSet::new();
        for job in &self.jobs {
            if !seen.insert((job.source_ref.clone(), job.final_member_index)) {
                return Err(PipelineError::DuplicateJob(job.job_id.clone()));
            }
        }
        Ok(())
    }
}

/// A planning failure for one source; other sources are unaffected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFailure {
    pub source_ref: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub manifest: TranslationManifest,
    pub failures: Vec<SourceFailure>,
}

/// Plan translation jobs: per source, draw `finals_per_source` final targets
/// and run one progressive search each. Deterministic per
/// `(seed, source_ref)`, so results do not depend on source order or
/// parallelism.
pub fn plan_manifest(
    sources: &[SourceRecord],
    set: &NovelPoseSet,
    search_config: &SearchConfig,
    projection: &ProjectionConfig,
    seed: u64,
) -> Result<PlanOutcome, PipelineError> {
    use rand::SeedableRng;
    if sources.is_empty() {
        return Err(PipelineError::NoSources);
    }
    search_config.validate()?;
    let mut jobs = Vec::new();
    let mut failures = Vec::new();
    for source in sources {
        if let Err(err) = source.validate(set.skeleton()) {
            failures.push(SourceFailure {
                source_ref: source.image_ref.clone(),
                message: err.to_string(),
            });
            continue;
        }
        let source_seed = derive_seed(seed, &source.image_ref);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(source_seed);
        let finals =
            match select_final_target_indices(set, search_config.finals_per_source, &mut rng) {
                Ok(finals) => finals,
                Err(err) => {
                    failures.push(SourceFailure {
                        source_ref: source.image_ref.clone(),
                        message: err.to_string(),
                    });
                    continue;
                }
            };
        for (sequence_index, final_index) in finals.into_iter().enumerate() {
            let anchor = SearchAnchor::Image {
                pose: &source.estimated_pose,
                camera: &source.camera,
            };
            match plan_single_job(
                source,
                &anchor,
                final_index,
                sequence_index,
                set,
                search_config,
                projection,
                source_seed,
            ) {
                Ok(job) => jobs.push(job),
                Err(err) => failures.push(SourceFailure {
                    source_ref: source.image_ref.clone(),
                    message: format!("final target {final_index}: {err}"),
                }),
            }
        }
    }
    let manifest = TranslationManifest { seed, jobs };
    manifest.validate()?;
    Ok(PlanOutcome { manifest, failures })
}

#[allow(clippy::too_many_arguments)]
fn plan_single_job(
    source: &SourceRecord,
    anchor: &SearchAnchor,
    final_index: usize,
    sequence_index: usize,
    set: &NovelPoseSet,
    search_config: &SearchConfig,
    projection: &ProjectionConfig,
    source_seed: u64,
) -> Result<TranslationJob, PipelineError> {
    let sequence = progressive_search(anchor, final_index, set, projection, search_config)?;
    let mut steps = Vec::with_capacity(sequence.len());
    for &member_index in &sequence.member_indices {
        let target_pose_2d = transform_into_view(
            set.pose(member_index),
            &source.estimated_pose,
            &source.camera,
            projection,
            set.skeleton(),
        )
        .map_err(SearchError::from)?;
        steps.push(JobStep {
            member_index,
            target_pose_3d: set.pose(member_index).clone(),
            target_pose_2d,
        });
    }
    Ok(TranslationJob {
        job_id: format!("{}#{}", source.image_ref, sequence_index),
        source_ref: source.image_ref.clone(),
        sequence_index,
        final_member_index: final_index,
        seed: derive_indexed_seed(source_seed, "job", sequence_index as u64),
        objective: sequence.objective,
        steps,
    })
}

/// Outcome of one executed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub step_index: usize,
    pub generated_ref: String,
    pub target_pose_2d: Pose2D,
    pub estimated_pose: Option<Pose2D>,
    pub estimator_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum JobStatus {
    Completed,
    FailedAtStep { step_index: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub job_id: String,
    pub status: JobStatus,
    pub steps: Vec<StepResult>,
}

/// Execute every job of the manifest. Steps run strictly in order, each
/// step's generated image feeding the next translation. A translator failure
/// marks the job failed at that step and preserves the completed prefix; an
/// estimator failure leaves the step without an estimated pose (rejected
/// later by the filter).
pub fn execute_manifest(
    manifest: &TranslationManifest,
    translator: &mut dyn TranslatorAdapter,
    estimator: &mut dyn EstimatorAdapter,
) -> Vec<JobResult> {
    let mut results = Vec::with_capacity(manifest.jobs.len());
    for job in &manifest.jobs {
        let mut status = JobStatus::Completed;
        let mut steps = Vec::with_capacity(job.steps.len());
        let mut source_ref = job.source_ref.clone();
        for (step_index, step) in job.steps.iter().enumerate() {
            let request = StepRequest {
                job_id: &job.job_id,
                step_index,
                step_seed: derive_indexed_seed(job.seed, "step", step_index as u64),
                source_ref: &source_ref,
                target_pose: &step.target_pose_2d,
            };
            match translator.translate(&request) {
                Err(err) => {
                    status = JobStatus::FailedAtStep {
                        step_index,
                        message: err.to_string(),
                    };
                    break;
                }
                Ok(generated_ref) => {
                    let (estimated_pose, estimator_error) = match estimator.estimate(&generated_ref)
                    {
                        Ok(pose) => (Some(pose), None),
                        Err(err) => (None, Some(err.to_string())),
                    };
                    steps.push(StepResult {
                        step_index,
                        generated_ref: generated_ref.clone(),
                        target_pose_2d: step.target_pose_2d.clone(),
                        estimated_pose,
                        estimator_error,
                    });
                    source_ref = generated_ref;
                }
            }
        }
        results.push(JobResult {
            job_id: job.job_id.clone(),
            status,
            steps,
        });
    }
    results
}
