//! Pose-diversification toolkit: generate novel 3D human poses with a
//! diffusion sampler, assemble a diversity-constrained pose set, plan
//! bounded-length sequences of intermediate target poses, and post-process
//! translated images (noise filtering, mask cleanup, resizing, occlusion-aware
//! placement).

pub mod camera;
pub mod config;
pub mod diffusion;
pub mod formats;
pub mod metric;
pub mod novel_set;
pub mod pipeline;
pub mod pose;
pub mod search;
pub mod seeding;
pub mod skeleton;
pub mod stats;

pub use camera::{
    project_to_2d, transform_to_camera, CameraError, CameraPose, ProjectionConfig, ProjectionError,
};
pub use config::{load_config, ConfigError, PipelineConfig};
pub use diffusion::{
    diffuse_forward, make_schedule, sample_pose, train_toy_denoiser, training_loss, Denoiser,
    DiffusionError, GaussianOracleDenoiser, NoiseSchedule, ToyDenoiser, TrainConfig,
};
pub use metric::{
    align_facing, facing_direction, pose_distance_2d, pose_distance_2d_vs_3d, pose_distance_3d,
    transform_into_view, MetricError,
};
pub use novel_set::{build_novel_set, NovelPoseSet, NovelSetConfig, NovelSetError, SetProvenance};
pub use pipeline::{
    execute_manifest, filter_noisy, plan_manifest, JobResult, JobStatus, PipelineError,
    PlanOutcome, SourceRecord, TranslationJob, TranslationManifest,
};
pub use pose::{Pose2D, Pose3D, PoseError};
pub use search::{
    brute_force_search, candidate_filter, progressive_search, select_final_target_indices,
    select_final_targets, DeepRegime, SearchAnchor, SearchConfig, SearchError, TargetPoseSequence,
};
pub use skeleton::{Skeleton, SkeletonError, JOINT_COUNT};
pub use stats::{RunStats, StatsError};
