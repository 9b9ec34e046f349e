//! Forward diffusion and reverse sampling.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::pose::Pose3D;

use super::{Denoiser, DiffusionError, NoiseSchedule};

/// Single-draw equivalent of `t` sequential noising steps:
/// `signal_coeff(t) * p0 + noise_coeff(t) * z` with `z` standard normal per
/// coordinate.
pub fn diffuse_forward<R: Rng + ?Sized>(
    clean: &Pose3D,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<Pose3D, DiffusionError> {
    schedule.check_step(t)?;
    let signal = schedule.signal_coeff(t);
    let noise = schedule.noise_coeff(t);
    let rows = clean
        .rows()
        .iter()
        .map(|row| {
            let mut out = [0.0; 3];
            for (axis, value) in row.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                out[axis] = signal * value + noise * z;
            }
            out
        })
        .collect();
    Ok(Pose3D::new(rows)?)
}

/// Reverse sampling: start from a standard-normal pose at step `T`, then
/// repeatedly predict the clean pose and re-diffuse it to the previous step.
/// The prediction at step 1 is returned directly.
pub fn sample_pose<D: Denoiser + ?Sized, R: Rng + ?Sized>(
    denoiser: &D,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<Pose3D, DiffusionError> {
    let rows = (0..denoiser.joint_count())
        .map(|_| {
            let mut out = [0.0; 3];
            for value in &mut out {
                *value = rng.sample(StandardNormal);
            }
            out
        })
        .collect();
    let mut current = Pose3D::new(rows)?;
    for t in (1..=schedule.step_count()).rev() {
        let predicted = denoiser
            .predict_clean(&current, t)
            .map_err(|err| match err {
                DiffusionError::Pose(_) => DiffusionError::NonFiniteDenoiserOutput { t },
                other => other,
            })?;
        current = if t > 1 {
            diffuse_forward(&predicted, t - 1, schedule, rng)?
        } else {
            predicted
        };
    }
    Ok(current)
}

/// Squared reconstruction error of the denoiser on one noising draw:
/// `|| p0 - denoiser(diffuse_forward(p0, t), t) ||^2` over all coordinates.
pub fn training_loss<D: Denoiser + ?Sized, R: Rng + ?Sized>(
    denoiser: &D,
    clean: &Pose3D,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<f64, DiffusionError> {
    let noisy = diffuse_forward(clean, t, schedule, rng)?;
    let predicted = denoiser.predict_clean(&noisy, t)?;
    let loss = clean
        .rows()
        .iter()
        .zip(predicted.rows())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
        .sum::<f64>();
    if !loss.is_finite() {
        return Err(DiffusionError::Diverged { iteration: 0 });
    }
    Ok(loss)
}
