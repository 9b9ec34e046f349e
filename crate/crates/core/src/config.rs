//! Single configuration file governing every pipeline stage. Unknown keys
//! are rejected; missing keys fall back to the published defaults. Every run
//! is seeded (the seed itself defaults, so no run ever reads ambient
//! entropy).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::ProjectionConfig;
use crate::diffusion::{make_schedule, NoiseSchedule, TrainConfig};
use crate::novel_set::NovelSetConfig;
use crate::pipeline::OcclusionRule;
use crate::search::{DeepRegime, SearchConfig};
use crate::seeding::{derive_seed, fnv1a_64};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field {field}: {message}")]
    Range { field: String, message: String },
}

fn range_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NovelSetSection {
    pub t_sim: f64,
    pub n_pos: usize,
    pub max_attempts: usize,
}

impl Default for NovelSetSection {
    fn default() -> Self {
        let defaults = NovelSetConfig::default();
        Self {
            t_sim: defaults.t_sim,
            n_pos: defaults.n_pos,
            max_attempts: defaults.max_attempts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub k: u32,
    pub n_max: usize,
    pub finals_per_source: usize,
    pub deep_regime: DeepRegime,
    pub pruning: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        let defaults = SearchConfig::default();
        Self {
            k: defaults.k,
            n_max: defaults.n_max,
            finals_per_source: defaults.finals_per_source,
            deep_regime: defaults.deep_regime,
            pruning: defaults.pruning,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub t_filt: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self { t_filt: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            steps: 1000,
            beta_min: 1e-4,
            beta_max: 2e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_width: usize,
    pub time_embed_dim: usize,
    /// Poses per mode in the built-in two-mode training dataset.
    pub dataset_per_mode: usize,
    /// Per-coordinate jitter of the built-in dataset.
    pub dataset_jitter: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let defaults = TrainConfig::default();
        Self {
            iterations: defaults.iterations,
            batch_size: defaults.batch_size,
            learning_rate: defaults.learning_rate,
            hidden_width: defaults.hidden_width,
            time_embed_dim: defaults.time_embed_dim,
            dataset_per_mode: 64,
            dataset_jitter: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    #[default]
    Mock,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdapterSection {
    pub kind: AdapterKind,
    /// Isotropic noise amplitude of the mock translator.
    pub noise_amplitude: f64,
    /// External command (program plus fixed leading arguments).
    pub command: Vec<String>,
}

impl Default for AdapterSection {
    fn default() -> Self {
        Self {
            kind: AdapterKind::Mock,
            noise_amplitude: 0.0,
            command: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComposeSection {
    pub mono_color: [u8; 3],
    pub tolerance: f64,
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub max_tries: usize,
    pub occlusion_rule: OcclusionRule,
}

impl Default for ComposeSection {
    fn default() -> Self {
        Self {
            mono_color: [128, 128, 128],
            tolerance: 0.0,
            canvas_width: 512,
            canvas_height: 512,
            max_tries: 100,
            occlusion_rule: OcclusionRule::BottomEdge,
        }
    }
}

/// Fully resolved pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub novel_set: NovelSetSection,
    pub search: SearchSection,
    pub filter: FilterSection,
    pub schedule: ScheduleSection,
    pub projection: ProjectionConfig,
    pub training: TrainingSection,
    pub adapter: AdapterSection,
    pub compose: ComposeSection,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let set = &self.novel_set;
        if !set.t_sim.is_finite() || set.t_sim <= 0.0 || set.t_sim >= 2.0 {
            return Err(range_err("novel_set.t_sim", "must lie in (0, 2)"));
        }
        if set.n_pos == 0 {
            return Err(range_err("novel_set.n_pos", "must be at least 1"));
        }
        if set.max_attempts == 0 {
            return Err(range_err("novel_set.max_attempts", "must be at least 1"));
        }
        if self.search.k == 0 {
            return Err(range_err("search.k", "must be at least 1"));
        }
        if self.search.n_max == 0 {
            return Err(range_err("search.n_max", "must be at least 1"));
        }
        if self.search.finals_per_source == 0 {
            return Err(range_err("search.finals_per_source", "must be at least 1"));
        }
        if !self.filter.t_filt.is_finite() || self.filter.t_filt <= 0.0 || self.filter.t_filt > 2.0
        {
            return Err(range_err("filter.t_filt", "must lie in (0, 2]"));
        }
        if self.schedule.steps == 0 {
            return Err(range_err("schedule.steps", "must be at least 1"));
        }
        let betas_ok = self.schedule.beta_min.is_finite()
            && self.schedule.beta_max.is_finite()
            && self.schedule.beta_min > 0.0
            && self.schedule.beta_min <= self.schedule.beta_max
            && self.schedule.beta_max < 1.0;
        if !betas_ok {
            return Err(range_err(
                "schedule.beta_min/beta_max",
                "must satisfy 0 < beta_min <= beta_max < 1",
            ));
        }
        if !self.projection.focal_length().is_finite() || self.projection.focal_length() <= 0.0 {
            return Err(range_err("projection.focal_length", "must be positive"));
        }
        if self.training.batch_size == 0 {
            return Err(range_err("training.batch_size", "must be at least 1"));
        }
        if !self.training.learning_rate.is_finite() || self.training.learning_rate <= 0.0 {
            return Err(range_err("training.learning_rate", "must be positive"));
        }
        if self.training.hidden_width == 0 {
            return Err(range_err("training.hidden_width", "must be at least 1"));
        }
        if self.training.time_embed_dim == 0 {
            return Err(range_err("training.time_embed_dim", "must be at least 1"));
        }
        if self.training.dataset_per_mode == 0 {
            return Err(range_err("training.dataset_per_mode", "must be at least 1"));
        }
        if !self.training.dataset_jitter.is_finite() || self.training.dataset_jitter < 0.0 {
            return Err(range_err("training.dataset_jitter", "must be non-negative"));
        }
        if !self.adapter.noise_amplitude.is_finite() || self.adapter.noise_amplitude < 0.0 {
            return Err(range_err("adapter.noise_amplitude", "must be non-negative"));
        }
        if self.adapter.kind == AdapterKind::External && self.adapter.command.is_empty() {
            return Err(range_err(
                "adapter.command",
                "external adapter needs a command",
            ));
        }
        if !self.compose.tolerance.is_finite() || self.compose.tolerance < 0.0 {
            return Err(range_err("compose.tolerance", "must be non-negative"));
        }
        if self.compose.canvas_width == 0 || self.compose.canvas_height == 0 {
            return Err(range_err(
                "compose.canvas_width/canvas_height",
                "must be positive",
            ));
        }
        if self.compose.max_tries == 0 {
            return Err(range_err("compose.max_tries", "must be at least 1"));
        }
        Ok(())
    }

    pub fn novel_set_config(&self) -> NovelSetConfig {
        NovelSetConfig {
            t_sim: self.novel_set.t_sim,
            n_pos: self.novel_set.n_pos,
            max_attempts: self.novel_set.max_attempts,
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            k: self.search.k,
            n_max: self.search.n_max,
            finals_per_source: self.search.finals_per_source,
            deep_regime: self.search.deep_regime,
            pruning: self.search.pruning,
        }
    }

    pub fn noise_schedule(&self) -> Result<NoiseSchedule, crate::diffusion::DiffusionError> {
        make_schedule(
            self.schedule.steps,
            self.schedule.beta_min,
            self.schedule.beta_max,
        )
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.training.iterations,
            batch_size: self.training.batch_size,
            learning_rate: self.training.learning_rate,
            hidden_width: self.training.hidden_width,
            time_embed_dim: self.training.time_embed_dim,
            seed: derive_seed(self.seed, "train"),
        }
    }

    /// Stable hash of the resolved configuration, embedded in stage outputs
    /// for provenance.
    pub fn content_hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a_64(canonical.bytes()))
    }
}

/// Parse and validate a configuration file; missing keys resolve to the
/// published defaults, unknown keys are rejected.
pub fn load_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let config: PipelineConfig = toml::from_str(&text)?;
    config.validate()?;
    Ok(config)
}
