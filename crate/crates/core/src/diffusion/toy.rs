//! Small trainable denoiser: a two-layer tanh network over the flattened
//! pose concatenated with a sinusoidal embedding of the step index.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::pose::Pose3D;
use crate::skeleton::{canonical_crouch, canonical_standing};

use super::{diffuse_forward, Denoiser, DiffusionError, NoiseSchedule};

/// Sinusoidal embedding of a diffusion step index.
pub fn time_embedding(t: usize, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    let pairs = dim / 2;
    for i in 0..pairs {
        let freq = 1.0 / 10_000f64.powf(i as f64 / pairs as f64);
        let phase = t as f64 * freq;
        out.push(phase.sin());
        out.push(phase.cos());
    }
    if dim % 2 == 1 {
        out.push(1.0);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_width: usize,
    pub time_embed_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 4000,
            batch_size: 64,
            learning_rate: 2e-3,
            hidden_width: 64,
            time_embed_dim: 16,
            seed: 0,
        }
    }
}

/// Two-layer feed-forward denoiser. Parameters live in one flat array
/// ordered `[w1, b1, w2, b2]`, which keeps serialization and gradient
/// updates simple.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    joint_count: usize,
    hidden_width: usize,
    time_embed_dim: usize,
    params: Vec<f64>,
}

impl ToyDenoiser {
    pub fn init<R: Rng + ?Sized>(
        joint_count: usize,
        hidden_width: usize,
        time_embed_dim: usize,
        rng: &mut R,
    ) -> Self {
        let input_dim = joint_count * 3 + time_embed_dim;
        let output_dim = joint_count * 3;
        let total =
            hidden_width * input_dim + hidden_width + output_dim * hidden_width + output_dim;
        let w1_scale = (1.0 / input_dim as f64).sqrt();
        let w2_scale = (1.0 / hidden_width as f64).sqrt();
        let mut params = Vec::with_capacity(total);
        for _ in 0..hidden_width * input_dim {
            let z: f64 = rng.sample(StandardNormal);
            params.push(z * w1_scale);
        }
        params.extend(std::iter::repeat_n(0.0, hidden_width));
        for _ in 0..output_dim * hidden_width {
            let z: f64 = rng.sample(StandardNormal);
            params.push(z * w2_scale);
        }
        params.extend(std::iter::repeat_n(0.0, output_dim));
        Self {
            joint_count,
            hidden_width,
            time_embed_dim,
            params,
        }
    }

    pub fn from_params(
        joint_count: usize,
        hidden_width: usize,
        time_embed_dim: usize,
        params: Vec<f64>,
    ) -> Result<Self, DiffusionError> {
        let expected = Self::param_count(joint_count, hidden_width, time_embed_dim);
        if params.len() != expected {
            return Err(DiffusionError::JointMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(Self {
            joint_count,
            hidden_width,
            time_embed_dim,
            params,
        })
    }

    pub fn param_count(joint_count: usize, hidden_width: usize, time_embed_dim: usize) -> usize {
        let input_dim = joint_count * 3 + time_embed_dim;
        let output_dim = joint_count * 3;
        hidden_width * input_dim + hidden_width + output_dim * hidden_width + output_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden_width
    }

    pub fn time_embed_dim(&self) -> usize {
        self.time_embed_dim
    }

    fn dims(&self) -> (usize, usize, usize) {
        (
            self.joint_count * 3 + self.time_embed_dim,
            self.hidden_width,
            self.joint_count * 3,
        )
    }

    fn input_vector(&self, noisy: &Pose3D, t: usize) -> Vec<f64> {
        let mut input: Vec<f64> = noisy.rows().iter().flatten().copied().collect();
        input.extend(time_embedding(t, self.time_embed_dim));
        input
    }

    /// Forward pass; returns the hidden activations and the output vector.
    fn forward(&self, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (input_dim, hidden, output_dim) = self.dims();
        let w1 = &self.params[..hidden * input_dim];
        let b1 = &self.params[hidden * input_dim..hidden * input_dim + hidden];
        let w2_off = hidden * input_dim + hidden;
        let w2 = &self.params[w2_off..w2_off + output_dim * hidden];
        let b2 = &self.params[w2_off + output_dim * hidden..];

        let mut activations = Vec::with_capacity(hidden);
        for j in 0..hidden {
            let row = &w1[j * input_dim..(j + 1) * input_dim];
            let pre: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b1[j];
            activations.push(pre.tanh());
        }
        let mut output = Vec::with_capacity(output_dim);
        for o in 0..output_dim {
            let row = &w2[o * hidden..(o + 1) * hidden];
            let y: f64 = row
                .iter()
                .zip(&activations)
                .map(|(w, h)| w * h)
                .sum::<f64>()
                + b2[o];
            output.push(y);
        }
        (activations, output)
    }

    /// Squared-error loss against `target` and its gradient with respect to
    /// every parameter, for a fixed noisy input.
    pub fn loss_and_gradient(&self, noisy: &Pose3D, t: usize, target: &Pose3D) -> (f64, Vec<f64>) {
        let (input_dim, hidden, output_dim) = self.dims();
        let input = self.input_vector(noisy, t);
        let (activations, output) = self.forward(&input);
        let target_flat: Vec<f64> = target.rows().iter().flatten().copied().collect();

        let mut loss = 0.0;
        let mut output_grad = vec![0.0; output_dim];
        for o in 0..output_dim {
            let diff = output[o] - target_flat[o];
            loss += diff * diff;
            output_grad[o] = 2.0 * diff;
        }

        let w2_off = hidden * input_dim + hidden;
        let w2 = &self.params[w2_off..w2_off + output_dim * hidden];

        let mut grad = vec![0.0; self.params.len()];
        // output layer
        for o in 0..output_dim {
            let g = output_grad[o];
            let row = &mut grad[w2_off + o * hidden..w2_off + (o + 1) * hidden];
            for (slot, h) in row.iter_mut().zip(&activations) {
                *slot = g * h;
            }
            grad[w2_off + output_dim * hidden + o] = g;
        }
        // hidden layer through tanh'
        for j in 0..hidden {
            let mut upstream = 0.0;
            for o in 0..output_dim {
                upstream += w2[o * hidden + j] * output_grad[o];
            }
            let local = upstream * (1.0 - activations[j] * activations[j]);
            let row = &mut grad[j * input_dim..(j + 1) * input_dim];
            for (slot, x) in row.iter_mut().zip(&input) {
                *slot = local * x;
            }
            grad[hidden * input_dim + j] = local;
        }
        (loss, grad)
    }

    fn apply_gradient(&mut self, grad: &[f64], step: f64) {
        for (param, g) in self.params.iter_mut().zip(grad) {
            *param -= step * g;
        }
    }
}

impl Denoiser for ToyDenoiser {
    fn joint_count(&self) -> usize {
        self.joint_count
    }

    fn predict_clean(&self, noisy: &Pose3D, t: usize) -> Result<Pose3D, DiffusionError> {
        if noisy.len() != self.joint_count {
            return Err(DiffusionError::JointMismatch {
                expected: self.joint_count,
                got: noisy.len(),
            });
        }
        let input = self.input_vector(noisy, t);
        let (_, output) = self.forward(&input);
        let rows = output.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Pose3D::new(rows)?)
    }
}

/// Result of a training run: mean dataset loss before and after, evaluated
/// with the same frozen noise draws so the two numbers are comparable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingReport {
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Minibatch gradient descent on the reconstruction loss with uniformly
/// sampled step indices. Returns the trained denoiser along with before and
/// after losses.
pub fn train_toy_denoiser<R: Rng + ?Sized>(
    dataset: &[Pose3D],
    schedule: &NoiseSchedule,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<(ToyDenoiser, TrainingReport), DiffusionError> {
    if dataset.is_empty() {
        return Err(DiffusionError::EmptyDataset);
    }
    let joint_count = dataset[0].len();
    for pose in dataset {
        if pose.len() != joint_count {
            return Err(DiffusionError::JointMismatch {
                expected: joint_count,
                got: pose.len(),
            });
        }
    }
    let mut denoiser =
        ToyDenoiser::init(joint_count, config.hidden_width, config.time_embed_dim, rng);
    let initial_loss = mean_dataset_loss(&denoiser, dataset, schedule, config.seed)?;

    let mut grad_sum = vec![0.0; denoiser.params().len()];
    for iteration in 0..config.iterations {
        grad_sum.iter_mut().for_each(|g| *g = 0.0);
        let mut batch_loss = 0.0;
        for _ in 0..config.batch_size {
            let clean = &dataset[rng.gen_range(0..dataset.len())];
            let t = rng.gen_range(1..=schedule.step_count());
            let noisy = diffuse_forward(clean, t, schedule, rng)?;
            let (loss, grad) = denoiser.loss_and_gradient(&noisy, t, clean);
            batch_loss += loss;
            for (sum, g) in grad_sum.iter_mut().zip(&grad) {
                *sum += g;
            }
        }
        if !batch_loss.is_finite() {
            return Err(DiffusionError::Diverged { iteration });
        }
        denoiser.apply_gradient(&grad_sum, config.learning_rate / config.batch_size as f64);
    }

    let final_loss = mean_dataset_loss(&denoiser, dataset, schedule, config.seed)?;
    Ok((
        denoiser,
        TrainingReport {
            initial_loss,
            final_loss,
        },
    ))
}

/// Mean reconstruction loss over the dataset with seeded `(t, noise)` draws,
/// so repeated evaluations of different denoisers are comparable.
pub fn mean_dataset_loss(
    denoiser: &ToyDenoiser,
    dataset: &[Pose3D],
    schedule: &NoiseSchedule,
    eval_seed: u64,
) -> Result<f64, DiffusionError> {
    use rand::SeedableRng;
    if dataset.is_empty() {
        return Err(DiffusionError::EmptyDataset);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(eval_seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut total = 0.0;
    for clean in dataset {
        let t = rng.gen_range(1..=schedule.step_count());
        let noisy = diffuse_forward(clean, t, schedule, &mut rng)?;
        let predicted = denoiser.predict_clean(&noisy, t)?;
        total += clean
            .rows()
            .iter()
            .zip(predicted.rows())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>();
    }
    let mean = total / dataset.len() as f64;
    if !mean.is_finite() {
        return Err(DiffusionError::Diverged { iteration: 0 });
    }
    Ok(mean)
}

/// Training distribution with two well-separated modes: jittered copies of
/// the canonical standing and crouching poses.
pub fn two_mode_dataset<R: Rng + ?Sized>(per_mode: usize, jitter: f64, rng: &mut R) -> Vec<Pose3D> {
    let modes = [canonical_standing(), canonical_crouch()];
    let mut out = Vec::with_capacity(per_mode * 2);
    for mode in &modes {
        for _ in 0..per_mode {
            let rows = mode
                .rows()
                .iter()
                .map(|row| {
                    let mut jittered = [0.0; 3];
                    for (axis, value) in row.iter().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        jittered[axis] = value + jitter * z;
                    }
                    jittered
                })
                .collect();
            out.push(Pose3D::new(rows).expect("jittered canonical pose is valid"));
        }
    }
    out
}
