//! Noise schedules for the pose diffusion process.
//!
//! The per-step update is `p(i) = sqrt(1 - alpha_i) * p(i-1) + sqrt(alpha_i) * z_i`,
//! i.e. `alpha_i` weights the noise added at step `i`. Collapsing `t` steps
//! into one draw gives signal coefficient `prod sqrt(1 - alpha_i)` and noise
//! coefficient `sqrt(1 - prod (1 - alpha_i))`.

use serde::{Deserialize, Serialize};

use super::DiffusionError;

/// Precomputed diffusion schedule. The squared cumulative coefficients are
/// the stored primitives so that `signal_sq(t) + noise_sq(t) == 1.0` holds
/// exactly; the unsquared coefficients are derived square roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    beta_min: f64,
    beta_max: f64,
    alphas: Vec<f64>,
    /// `signal_sq[t] = prod_{i=1..t} (1 - alpha_i)`, with `signal_sq[0] = 1`.
    signal_sq: Vec<f64>,
}

/// Build a schedule of `steps` per-step noise weights linearly interpolated
/// from `beta_min` to `beta_max`.
pub fn make_schedule(
    steps: usize,
    beta_min: f64,
    beta_max: f64,
) -> Result<NoiseSchedule, DiffusionError> {
    if steps == 0 {
        return Err(DiffusionError::ZeroSteps);
    }
    let bounds_ok = beta_min.is_finite()
        && beta_max.is_finite()
        && beta_min > 0.0
        && beta_min <= beta_max
        && beta_max < 1.0;
    if !bounds_ok {
        return Err(DiffusionError::InvalidBetaRange { beta_min, beta_max });
    }
    let alphas: Vec<f64> = (0..steps)
        .map(|i| {
            if steps == 1 {
                beta_min
            } else {
                beta_min + (beta_max - beta_min) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    let mut signal_sq = Vec::with_capacity(steps + 1);
    signal_sq.push(1.0);
    let mut product = 1.0;
    for &alpha in &alphas {
        product *= 1.0 - alpha;
        signal_sq.push(product);
    }
    Ok(NoiseSchedule {
        beta_min,
        beta_max,
        alphas,
        signal_sq,
    })
}

impl NoiseSchedule {
    pub fn step_count(&self) -> usize {
        self.alphas.len()
    }

    /// Per-step noise weight, 1-indexed.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Squared cumulative signal coefficient at step `t` (t = 0 means clean).
    pub fn signal_sq(&self, t: usize) -> f64 {
        self.signal_sq[t]
    }

    /// Squared cumulative noise coefficient at step `t`.
    pub fn noise_sq(&self, t: usize) -> f64 {
        1.0 - self.signal_sq[t]
    }

    pub fn signal_coeff(&self, t: usize) -> f64 {
        self.signal_sq(t).sqrt()
    }

    pub fn noise_coeff(&self, t: usize) -> f64 {
        self.noise_sq(t).sqrt()
    }

    pub fn check_step(&self, t: usize) -> Result<(), DiffusionError> {
        if t == 0 || t > self.step_count() {
            return Err(DiffusionError::StepOutOfRange {
                t,
                max: self.step_count(),
            });
        }
        Ok(())
    }

    /// Short provenance identifier recorded alongside generated pose sets.
    pub fn id(&self) -> String {
        format!(
            "linear-t{}-b{}-{}",
            self.step_count(),
            self.beta_min,
            self.beta_max
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_uses_beta_min() {
        let schedule = make_schedule(1, 0.5, 0.5).unwrap();
        assert_eq!(schedule.alpha(1), 0.5);
        assert_eq!(schedule.signal_sq(1), 0.5);
    }

    #[test]
    fn default_schedule_destroys_signal() {
        let schedule = make_schedule(1000, 1e-4, 2e-2).unwrap();
        // recompute the cumulative product from the raw alphas
        let product: f64 = schedule.alphas().iter().map(|a| (1.0 - a).sqrt()).product();
        assert!(product < 0.1, "signal coefficient at T: {product}");
        assert!((schedule.signal_coeff(1000) - product).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(matches!(
            make_schedule(10, 0.5, 0.4).unwrap_err(),
            DiffusionError::InvalidBetaRange { .. }
        ));
        assert!(matches!(
            make_schedule(10, 0.0, 0.4).unwrap_err(),
            DiffusionError::InvalidBetaRange { .. }
        ));
        assert!(matches!(
            make_schedule(10, 0.1, 1.0).unwrap_err(),
            DiffusionError::InvalidBetaRange { .. }
        ));
        assert_eq!(
            make_schedule(0, 0.1, 0.2).unwrap_err(),
            DiffusionError::ZeroSteps
        );
    }

    #[test]
    fn signal_is_monotone_and_variance_preserved() {
        let schedule = make_schedule(500, 1e-4, 2e-2).unwrap();
        for t in 1..=500 {
            assert!(schedule.signal_sq(t) <= schedule.signal_sq(t - 1));
            assert!(schedule.signal_sq(t) > 0.0);
            // exact by construction: a + (1 - a) rounds to 1 for a in [0, 1]
            assert_eq!(schedule.signal_sq(t) + schedule.noise_sq(t), 1.0);
        }
    }

    #[test]
    fn step_bounds_checked() {
        let schedule = make_schedule(10, 0.1, 0.2).unwrap();
        assert!(schedule.check_step(1).is_ok());
        assert!(schedule.check_step(10).is_ok());
        assert!(matches!(
            schedule.check_step(0),
            Err(DiffusionError::StepOutOfRange { .. })
        ));
        assert!(matches!(
            schedule.check_step(11),
            Err(DiffusionError::StepOutOfRange { .. })
        ));
    }
}
