//! Translator and estimator adapters: the process boundary standing in for
//! the neural image translator and pose estimator.
//!
//! The mock pair shares a ledger of generated refs so the estimator can
//! return the pose the translator actually produced (target pose plus
//! isotropic noise). The external pair drives one command per step; the
//! command receives `(source ref, target pose file, output directory)` and
//! must print the generated image ref on the first stdout line and the path
//! of the estimated pose file on the second.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::pose::Pose2D;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("translator failed: {0}")]
    Translator(String),
    #[error("estimator failed: {0}")]
    Estimator(String),
    #[error("unknown image ref {0}")]
    UnknownRef(String),
    #[error("external command failed: {0}")]
    Command(String),
}

/// One translation request: morph the human in `source_ref` toward
/// `target_pose`. `step_seed` makes per-step randomness independent of
/// execution order.
#[derive(Debug, Clone)]
pub struct StepRequest<'a> {
    pub job_id: &'a str,
    pub step_index: usize,
    pub step_seed: u64,
    pub source_ref: &'a str,
    pub target_pose: &'a Pose2D,
}

pub trait TranslatorAdapter {
    /// Generate an image of the source human assuming the target pose;
    /// returns the generated image ref.
    fn translate(&mut self, request: &StepRequest) -> Result<String, AdapterError>;
}

pub trait EstimatorAdapter {
    /// Estimate the 2D pose of the human in a generated image.
    fn estimate(&mut self, image_ref: &str) -> Result<Pose2D, AdapterError>;
}

type SharedPoses = Arc<Mutex<HashMap<String, Pose2D>>>;

/// Mock translator: emits synthetic image refs and records, per ref, the
/// target pose perturbed by isotropic Gaussian noise of `noise_amplitude`.
pub struct MockTranslator {
    noise_amplitude: f64,
    generated: SharedPoses,
    fail_at: Option<(String, usize)>,
}

/// Mock estimator: returns the pose the mock translator recorded for a ref.
pub struct MockEstimator {
    generated: SharedPoses,
    fail_refs: Vec<String>,
}

/// Build a connected mock translator/estimator pair.
pub fn mock_adapter_pair(noise_amplitude: f64) -> (MockTranslator, MockEstimator) {
    let shared: SharedPoses = Arc::new(Mutex::new(HashMap::new()));
    (
        MockTranslator {
            noise_amplitude,
            generated: Arc::clone(&shared),
            fail_at: None,
        },
        MockEstimator {
            generated: shared,
            fail_refs: Vec::new(),
        },
    )
}

impl MockTranslator {
    /// Fail the step with this job id and step index (for failure-path
    /// tests).
    pub fn fail_at(mut self, job_id: impl Into<String>, step_index: usize) -> Self {
        self.fail_at = Some((job_id.into(), step_index));
        self
    }
}

impl MockEstimator {
    pub fn fail_on_ref(mut self, image_ref: impl Into<String>) -> Self {
        self.fail_refs.push(image_ref.into());
        self
    }
}

impl TranslatorAdapter for MockTranslator {
    fn translate(&mut self, request: &StepRequest) -> Result<String, AdapterError> {
        if let Some((job_id, step_index)) = &self.fail_at {
            if job_id == request.job_id && *step_index == request.step_index {
                return Err(AdapterError::Translator(format!(
                    "injected failure at {job_id} step {step_index}"
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(request.step_seed);
        let rows = request
            .target_pose
            .rows()
            .iter()
            .map(|&[x, y]| {
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                [x + self.noise_amplitude * dx, y + self.noise_amplitude * dy]
            })
            .collect();
        let estimated = Pose2D::new(rows)
            .map_err(|e| AdapterError::Translator(format!("degenerate mock pose: {e}")))?;
        let generated_ref = format!("gen/{}/{}", request.job_id, request.step_index);
        self.generated
            .lock()
            .expect("mock ledger lock")
            .insert(generated_ref.clone(), estimated);
        Ok(generated_ref)
    }
}

impl EstimatorAdapter for MockEstimator {
    fn estimate(&mut self, image_ref: &str) -> Result<Pose2D, AdapterError> {
        if self.fail_refs.iter().any(|r| r == image_ref) {
            return Err(AdapterError::Estimator(format!(
                "injected estimator failure for {image_ref}"
            )));
        }
        self.generated
            .lock()
            .expect("mock ledger lock")
            .get(image_ref)
            .cloned()
            .ok_or_else(|| AdapterError::UnknownRef(image_ref.to_string()))
    }
}

type SharedPaths = Arc<Mutex<HashMap<String, PathBuf>>>;

/// Translator backed by an external command invoked once per step.
pub struct ExternalTranslator {
    program: String,
    args: Vec<String>,
    work_dir: PathBuf,
    skeleton: crate::skeleton::Skeleton,
    estimates: SharedPaths,
}

/// Estimator that reads the pose files announced by [`ExternalTranslator`].
pub struct ExternalEstimator {
    skeleton: crate::skeleton::Skeleton,
    estimates: SharedPaths,
}

/// Build a connected external translator/estimator pair. `command` is the
/// program followed by fixed leading arguments.
pub fn external_adapter_pair(
    command: &[String],
    work_dir: impl Into<PathBuf>,
    skeleton: crate::skeleton::Skeleton,
) -> Result<(ExternalTranslator, ExternalEstimator), AdapterError> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| AdapterError::Command("empty command".to_string()))?;
    let shared: SharedPaths = Arc::new(Mutex::new(HashMap::new()));
    Ok((
        ExternalTranslator {
            program: program.clone(),
            args: args.to_vec(),
            work_dir: work_dir.into(),
            skeleton: skeleton.clone(),
            estimates: Arc::clone(&shared),
        },
        ExternalEstimator {
            skeleton,
            estimates: shared,
        },
    ))
}

impl TranslatorAdapter for ExternalTranslator {
    fn translate(&mut self, request: &StepRequest) -> Result<String, AdapterError> {
        let pose_path = self.work_dir.join(format!(
            "target-{}-{}.pose",
            request.job_id.replace('/', "_"),
            request.step_index
        ));
        crate::formats::posefile::write_single_pose_2d(
            &pose_path,
            &self.skeleton,
            request.target_pose,
        )
        .map_err(|e| AdapterError::Command(format!("writing target pose: {e}")))?;

        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(request.source_ref)
            .arg(&pose_path)
            .arg(&self.work_dir)
            .output()
            .map_err(|e| AdapterError::Command(format!("spawning {}: {e}", self.program)))?;
        if !output.status.success() {
            return Err(AdapterError::Translator(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let mut lines = stdout.lines();
        let generated_ref = lines
            .next()
            .ok_or_else(|| AdapterError::Command("missing generated ref on stdout".to_string()))?
            .trim()
            .to_string();
        let estimate_path = lines
            .next()
            .ok_or_else(|| AdapterError::Command("missing estimate path on stdout".to_string()))?
            .trim()
            .to_string();
        self.estimates
            .lock()
            .expect("estimate ledger lock")
            .insert(generated_ref.clone(), PathBuf::from(estimate_path));
        Ok(generated_ref)
    }
}

impl EstimatorAdapter for ExternalEstimator {
    fn estimate(&mut self, image_ref: &str) -> Result<Pose2D, AdapterError> {
        let path = self
            .estimates
            .lock()
            .expect("estimate ledger lock")
            .get(image_ref)
            .cloned()
            .ok_or_else(|| AdapterError::UnknownRef(image_ref.to_string()))?;
        crate::formats::posefile::read_single_pose_2d(&path, &self.skeleton)
            .map_err(|e| AdapterError::Estimator(format!("reading {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose() -> Pose2D {
        Pose2D::new((0..17).map(|i| [i as f64, 2.0 * i as f64]).collect()).unwrap()
    }

    #[test]
    fn zero_noise_mock_round_trips_the_target() {
        let (mut translator, mut estimator) = mock_adapter_pair(0.0);
        let target = pose();
        let request = StepRequest {
            job_id: "src#0",
            step_index: 0,
            step_seed: 42,
            source_ref: "src.png",
            target_pose: &target,
        };
        let generated = translator.translate(&request).unwrap();
        assert_eq!(generated, "gen/src#0/0");
        let estimated = estimator.estimate(&generated).unwrap();
        assert_eq!(estimated, target);
    }

    #[test]
    fn mock_noise_is_seed_deterministic() {
        let target = pose();
        let run = |seed| {
            let (mut translator, mut estimator) = mock_adapter_pair(0.1);
            let request = StepRequest {
                job_id: "j",
                step_index: 1,
                step_seed: seed,
                source_ref: "s",
                target_pose: &target,
            };
            let generated = translator.translate(&request).unwrap();
            estimator.estimate(&generated).unwrap()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn unknown_ref_is_an_error() {
        let (_, mut estimator) = mock_adapter_pair(0.0);
        assert!(matches!(
            estimator.estimate("nope").unwrap_err(),
            AdapterError::UnknownRef(_)
        ));
    }

    #[test]
    fn injected_failures_fire() {
        let (translator, _) = mock_adapter_pair(0.0);
        let mut translator = translator.fail_at("j", 2);
        let target = pose();
        let ok = StepRequest {
            job_id: "j",
            step_index: 1,
            step_seed: 0,
            source_ref: "s",
            target_pose: &target,
        };
        assert!(translator.translate(&ok).is_ok());
        let bad = StepRequest {
            step_index: 2,
            ..ok
        };
        assert!(matches!(
            translator.translate(&bad).unwrap_err(),
            AdapterError::Translator(_)
        ));
    }
}
