//! Noisy-image filtering: a generated step is rejected when the pose
//! distance between its target pose and the estimated pose exceeds the
//! filter threshold.

use serde::{Deserialize, Serialize};

use crate::metric::pose_distance_2d;
use crate::skeleton::Skeleton;

use super::JobResult;

/// Strict-greater rejection rule; a distance exactly at the threshold is
/// kept.
pub fn exceeds_threshold(distance: f64, threshold: f64) -> bool {
    distance > threshold
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    DistanceAboveThreshold,
    MissingEstimate,
    MetricFailure(String),
}

/// One generated step after filtering, with the measured distance when it
/// could be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredStep {
    pub job_id: String,
    pub step_index: usize,
    pub generated_ref: String,
    pub distance: Option<f64>,
    pub reject_reason: Option<RejectReason>,
}

/// Partition of all generated steps into kept and rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub threshold: f64,
    pub kept: Vec<FilteredStep>,
    pub rejected: Vec<FilteredStep>,
}

impl FilterOutcome {
    pub fn generated(&self) -> usize {
        self.kept.len() + self.rejected.len()
    }
}

/// Partition every completed step of `results` by the pose-distance sanity
/// check. Steps without an estimated pose are rejected with a recorded
/// reason.
pub fn filter_noisy(results: &[JobResult], threshold: f64, skeleton: &Skeleton) -> FilterOutcome {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for result in results {
        for step in &result.steps {
            let mut entry = FilteredStep {
                job_id: result.job_id.clone(),
                step_index: step.step_index,
                generated_ref: step.generated_ref.clone(),
                distance: None,
                reject_reason: None,
            };
            match &step.estimated_pose {
                None => {
                    entry.reject_reason = Some(RejectReason::MissingEstimate);
                    rejected.push(entry);
                }
                Some(estimated) => {
                    match pose_distance_2d(&step.target_pose_2d, estimated, skeleton) {
                        Err(err) => {
                            entry.reject_reason =
                                Some(RejectReason::MetricFailure(err.to_string()));
                            rejected.push(entry);
                        }
                        Ok(distance) => {
                            entry.distance = Some(distance);
                            if exceeds_threshold(distance, threshold) {
                                entry.reject_reason = Some(RejectReason::DistanceAboveThreshold);
                                rejected.push(entry);
                            } else {
                                kept.push(entry);
                            }
                        }
                    }
                }
            }
        }
    }
    FilterOutcome {
        threshold,
        kept,
        rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{JobStatus, StepResult};
    use crate::pose::Pose2D;

    fn identity_pose() -> Pose2D {
        Pose2D::new((0..17).map(|i| [i as f64, (i * i) as f64]).collect()).unwrap()
    }

    fn result_with_steps(steps: Vec<StepResult>) -> JobResult {
        JobResult {
            job_id: "job".to_string(),
            status: JobStatus::Completed,
            steps,
        }
    }

    #[test]
    fn boundary_is_kept_and_strictly_above_rejected() {
        assert!(!exceeds_threshold(0.1, 0.1));
        assert!(exceeds_threshold(0.1 + 1e-9, 0.1));
        assert!(!exceeds_threshold(0.1 - 1e-9, 0.1));
    }

    #[test]
    fn exact_estimate_is_kept_with_zero_distance() {
        let pose = identity_pose();
        let results = vec![result_with_steps(vec![StepResult {
            step_index: 0,
            generated_ref: "gen/0".to_string(),
            target_pose_2d: pose.clone(),
            estimated_pose: Some(pose),
            estimator_error: None,
        }])];
        let outcome = filter_noisy(&results, 0.1, &Skeleton::h36m17());
        assert_eq!(outcome.kept.len(), 1);
        assert!(outcome.rejected.is_empty());
        assert!(outcome.kept[0].distance.unwrap() < 1e-12);
    }

    #[test]
    fn missing_estimate_is_rejected_with_reason() {
        let pose = identity_pose();
        let results = vec![result_with_steps(vec![StepResult {
            step_index: 0,
            generated_ref: "gen/0".to_string(),
            target_pose_2d: pose,
            estimated_pose: None,
            estimator_error: Some("injected".to_string()),
        }])];
        let outcome = filter_noisy(&results, 0.1, &Skeleton::h36m17());
        assert!(outcome.kept.is_empty());
        assert_eq!(
            outcome.rejected[0].reject_reason,
            Some(RejectReason::MissingEstimate)
        );
    }
}
