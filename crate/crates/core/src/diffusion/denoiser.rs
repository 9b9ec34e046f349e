//! Denoiser contract and the analytic Gaussian oracle.

use crate::pose::Pose3D;

use super::{DiffusionError, NoiseSchedule};

/// Predicts the clean pose from a noisy one at a given diffusion step.
/// Implementations must be deterministic given `(noisy, t)` and their own
/// parameters.
pub trait Denoiser {
    /// Number of joints in the poses this denoiser handles.
    fn joint_count(&self) -> usize;

    fn predict_clean(&self, noisy: &Pose3D, t: usize) -> Result<Pose3D, DiffusionError>;
}

/// Analytic denoiser for an isotropic Gaussian pose distribution
/// `N(mean, variance * I)`: the affine transport that maps the step-`t`
/// noisy marginal exactly onto the target distribution. Reverse sampling
/// with this denoiser therefore reproduces `N(mean, variance * I)`. With
/// `variance = 0` it always returns `mean`, which makes sampling exact and
/// seed-independent.
///
/// The oracle must be built with the same schedule used for sampling.
#[derive(Debug, Clone)]
pub struct GaussianOracleDenoiser {
    mean: Pose3D,
    variance: f64,
    schedule: NoiseSchedule,
}

impl GaussianOracleDenoiser {
    pub fn new(
        mean: Pose3D,
        variance: f64,
        schedule: &NoiseSchedule,
    ) -> Result<Self, DiffusionError> {
        if !variance.is_finite() || variance < 0.0 {
            return Err(DiffusionError::NegativeVariance(variance));
        }
        Ok(Self {
            mean,
            variance,
            schedule: schedule.clone(),
        })
    }

    pub fn mean(&self) -> &Pose3D {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl Denoiser for GaussianOracleDenoiser {
    fn joint_count(&self) -> usize {
        self.mean.len()
    }

    fn predict_clean(&self, noisy: &Pose3D, t: usize) -> Result<Pose3D, DiffusionError> {
        self.schedule.check_step(t)?;
        if noisy.len() != self.mean.len() {
            return Err(DiffusionError::JointMismatch {
                expected: self.mean.len(),
                got: noisy.len(),
            });
        }
        let signal = self.schedule.signal_coeff(t);
        let signal_sq = self.schedule.signal_sq(t);
        let noise_sq = self.schedule.noise_sq(t);
        // x_t ~ N(signal * mean, (signal_sq * variance + noise_sq) I);
        // rescale its spread to the target standard deviation
        let marginal_sd = (signal_sq * self.variance + noise_sq).sqrt();
        let gain = if marginal_sd > 0.0 {
            self.variance.sqrt() / marginal_sd
        } else {
            0.0
        };
        let rows = self
            .mean
            .rows()
            .iter()
            .zip(noisy.rows())
            .map(|(mu, x)| {
                [
                    mu[0] + gain * (x[0] - signal * mu[0]),
                    mu[1] + gain * (x[1] - signal * mu[1]),
                    mu[2] + gain * (x[2] - signal * mu[2]),
                ]
            })
            .collect();
        Ok(Pose3D::new(rows)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::make_schedule;
    use crate::skeleton::canonical_standing;

    #[test]
    fn point_mass_oracle_returns_mean() {
        let schedule = make_schedule(100, 1e-4, 2e-2).unwrap();
        let mean = canonical_standing();
        let oracle = GaussianOracleDenoiser::new(mean.clone(), 0.0, &schedule).unwrap();
        let noisy = Pose3D::new(vec![[1.0, -2.0, 0.5]; 17]).unwrap();
        for t in [1, 50, 100] {
            let predicted = oracle.predict_clean(&noisy, t).unwrap();
            assert_eq!(predicted, mean);
        }
    }

    #[test]
    fn rejects_negative_variance() {
        let schedule = make_schedule(10, 0.1, 0.2).unwrap();
        assert_eq!(
            GaussianOracleDenoiser::new(canonical_standing(), -1.0, &schedule).unwrap_err(),
            DiffusionError::NegativeVariance(-1.0)
        );
    }

    #[test]
    fn joint_mismatch_detected() {
        let schedule = make_schedule(10, 0.1, 0.2).unwrap();
        let oracle = GaussianOracleDenoiser::new(canonical_standing(), 1.0, &schedule).unwrap();
        let noisy = Pose3D::new(vec![[1.0, 0.0, 0.0]; 4]).unwrap();
        assert!(matches!(
            oracle.predict_clean(&noisy, 5).unwrap_err(),
            DiffusionError::JointMismatch {
                expected: 17,
                got: 4
            }
        ));
    }
}
