//! Stage implementations behind the subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use posediv_core::config::{AdapterKind, PipelineConfig};
use posediv_core::diffusion::{sample_pose, train_toy_denoiser, two_mode_dataset, ToyDenoiser};
use posediv_core::formats::{denoiser_file, pbm, posefile, records};
use posediv_core::novel_set::{build_novel_set, NovelSetError, SetProvenance};
use posediv_core::pipeline::{
    execute_manifest, external_adapter_pair, filter_noisy, mock_adapter_pair, morph_cleanup,
    place_single, place_with_occlusion, resize_factor, EstimatorAdapter, PlacementSpec,
    TranslatorAdapter,
};
use posediv_core::seeding::{derive_indexed_seed, derive_seed};
use posediv_core::skeleton::Skeleton;
use posediv_core::stats::{RunStats, StageTiming};
use posediv_core::{load_config, pipeline::extract_mask};

#[derive(Args)]
pub struct Common {
    /// Pipeline configuration file (TOML); missing keys use defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Append a `stage,seconds` timing row to this file.
    #[arg(long)]
    pub timings: Option<PathBuf>,
}

/// Error carrying a short kind tag for the machine-readable stderr record.
pub struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl std::fmt::Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }

    pub fn record(&self, stage: &str) -> String {
        serde_json::json!({
            "error": {
                "stage": stage,
                "kind": self.kind,
                "message": self.message,
            }
        })
        .to_string()
    }
}

macro_rules! impl_from_error {
    ($type:ty, $kind:literal) => {
        impl From<$type> for CliError {
            fn from(error: $type) -> Self {
                CliError::new($kind, error)
            }
        }
    };
}

impl_from_error!(posediv_core::ConfigError, "config");
impl_from_error!(posediv_core::formats::FormatError, "format");
impl_from_error!(posediv_core::DiffusionError, "diffusion");
impl_from_error!(posediv_core::PipelineError, "pipeline");
impl_from_error!(posediv_core::SearchError, "search");
impl_from_error!(posediv_core::StatsError, "stats");
impl_from_error!(posediv_core::pipeline::PlacementError, "placement");
impl_from_error!(posediv_core::pipeline::AdapterError, "adapter");
impl_from_error!(std::io::Error, "io");

type CliResult = Result<(), CliError>;

fn load(common: &Common) -> Result<PipelineConfig, CliError> {
    match &common.config {
        Some(path) => Ok(load_config(path)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn record_timing(common: &Common, stage: &str, start: Instant) -> CliResult {
    if let Some(path) = &common.timings {
        use std::io::Write as _;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        writeln!(file, "{stage},{}", start.elapsed().as_secs_f64())?;
    }
    Ok(())
}

pub fn gen_poses(
    common: &Common,
    out: &Path,
    count: usize,
    dataset: Option<PathBuf>,
    load_denoiser: Option<PathBuf>,
    save_denoiser: Option<PathBuf>,
) -> CliResult {
    let start = Instant::now();
    let config = load(common)?;
    let skeleton = Skeleton::h36m17();
    let schedule = config.noise_schedule()?;

    let mut metas: Vec<(String, String)> = vec![
        ("kind".to_string(), "sample-list".to_string()),
        ("seed".to_string(), config.seed.to_string()),
        ("schedule".to_string(), schedule.id()),
        ("config_hash".to_string(), config.content_hash()),
    ];

    let denoiser: ToyDenoiser = match load_denoiser {
        Some(path) => denoiser_file::read_denoiser(&path)?,
        None => {
            let dataset = match dataset {
                Some(path) => posefile::read_pose_list(&path, &skeleton)?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "dataset"));
                    two_mode_dataset(
                        config.training.dataset_per_mode,
                        config.training.dataset_jitter,
                        &mut rng,
                    )
                }
            };
            let train_config = config.train_config();
            let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
            let (denoiser, report) =
                train_toy_denoiser(&dataset, &schedule, &train_config, &mut rng)?;
            metas.push((
                "training_loss".to_string(),
                format!("{} {}", report.initial_loss, report.final_loss),
            ));
            println!(
                "trained denoiser on {} poses: mean loss {:.4} -> {:.4}",
                dataset.len(),
                report.initial_loss,
                report.final_loss
            );
            denoiser
        }
    };

    if let Some(path) = save_denoiser {
        denoiser_file::write_denoiser(&path, &denoiser)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "sample"));
    let poses: Vec<_> = (0..count)
        .map(|_| sample_pose(&denoiser, &schedule, &mut rng))
        .collect::<Result<_, _>>()?;
    posefile::write_pose_list(out, &skeleton, &poses, &metas)?;
    println!("wrote {count} sampled poses to {}", out.display());
    record_timing(common, "gen-poses", start)
}

pub fn build_set(
    common: &Common,
    out: &Path,
    from_poses: Option<PathBuf>,
    denoiser: Option<PathBuf>,
) -> CliResult {
    let start = Instant::now();
    let config = load(common)?;
    let skeleton = Skeleton::h36m17();
    let schedule = config.noise_schedule()?;
    let set_config = config.novel_set_config();
    let provenance = SetProvenance {
        seed: config.seed,
        schedule_id: schedule.id(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "build-set"));

    let built = match (&from_poses, &denoiser) {
        (Some(path), _) => {
            let poses = posefile::read_pose_list(path, &skeleton)?;
            let mut iter = poses.into_iter();
            build_novel_set(
                move |_rng: &mut ChaCha8Rng| iter.next().ok_or("candidate pose file exhausted"),
                skeleton.clone(),
                set_config,
                provenance,
                &mut rng,
            )
        }
        (None, Some(path)) => {
            let denoiser = denoiser_file::read_denoiser(path)?;
            build_novel_set(
                |rng: &mut ChaCha8Rng| sample_pose(&denoiser, &schedule, rng),
                skeleton.clone(),
                set_config,
                provenance,
                &mut rng,
            )
        }
        (None, None) => {
            return Err(CliError::new(
                "usage",
                "build-set needs either --from-poses or --denoiser",
            ))
        }
    };

    match built {
        Ok(set) => {
            posefile::write_pose_set(out, &set, Some(&config.content_hash()))?;
            println!("wrote novel pose set of {} to {}", set.len(), out.display());
            record_timing(common, "build-set", start)
        }
        Err(NovelSetError::BudgetExhausted {
            attempts,
            reached,
            target,
            partial,
        }) => {
            // the partial set is still valid; persist it before failing
            posefile::write_pose_set(out, &partial, Some(&config.content_hash()))?;
            Err(CliError::new(
                "novel-set",
                format!(
                    "budget exhausted after {attempts} consecutive rejections at {reached}/{target} poses; partial set written to {}",
                    out.display()
                ),
            ))
        }
        Err(other) => Err(CliError::new("novel-set", other)),
    }
}

pub fn plan(common: &Common, sources: &Path, set: &Path, out: &Path) -> CliResult {
    let start = Instant::now();
    let config = load(common)?;
    let skeleton = Skeleton::h36m17();
    let sources = records::read_sources(sources)?;
    let set = posefile::read_pose_set(set, &skeleton)?;
    let outcome = posediv_core::plan_manifest(
        &sources,
        &set,
        &config.search_config(),
        &config.projection,
        config.seed,
    )?;
    for failure in &outcome.failures {
        eprintln!(
            "{}",
            serde_json::json!({
                "warning": {
                    "stage": "plan",
                    "source_ref": failure.source_ref,
                    "message": failure.message,
                }
            })
        );
    }
    records::write_manifest(out, &outcome.manifest, &config)?;
    println!(
        "planned {} jobs ({} source failures) into {}",
        outcome.manifest.jobs.len(),
        outcome.failures.len(),
        out.display()
    );
    record_timing(common, "plan", start)
}

pub fn run(common: &Common, manifest: &Path, out: &Path, work_dir: Option<PathBuf>) -> CliResult {
    let start = Instant::now();
    let config = load(common)?;
    let skeleton = Skeleton::h36m17();
    let (_, manifest) = records::read_manifest(manifest)?;

    let results = match config.adapter.kind {
        AdapterKind::Mock => {
            let (mut translator, mut estimator) = mock_adapter_pair(config.adapter.noise_amplitude);
            execute_manifest(&manifest, &mut translator, &mut estimator)
        }
        AdapterKind::External => {
            let work_dir = match work_dir {
                Some(dir) => dir,
                None => std::env::temp_dir().join("posediv-run"),
            };
            std::fs::create_dir_all(&work_dir)?;
            let (mut translator, mut estimator) =
                external_adapter_pair(&config.adapter.command, &work_dir, skeleton)?;
            execute_adapters(&manifest, &mut translator, &mut estimator)
        }
    };
    let completed = results
        .iter()
        .filter(|r| matches!(r.status, posediv_core::JobStatus::Completed))
        .count();
    records::write_results(out, &results, &config.content_hash())?;
    println!(
        "executed {} jobs ({} completed) into {}",
        results.len(),
        completed,
        out.display()
    );
    record_timing(common, "run", start)
}

fn execute_adapters(
    manifest: &posediv_core::TranslationManifest,
    translator: &mut dyn TranslatorAdapter,
    estimator: &mut dyn EstimatorAdapter,
) -> Vec<posediv_core::JobResult> {
    execute_manifest(manifest, translator, estimator)
}

pub fn filter(common: &Common, results: &Path, out: &Path) -> CliResult {
    let start = Instant::now();
    let config = load(common)?;
    let skeleton = Skeleton::h36m17();
    let results = records::read_results(results)?;
    let outcome = filter_noisy(&results, config.filter.t_filt, &skeleton);
    records::write_filtered(out, &outcome)?;
    println!(
        "kept {} of {} generated steps (threshold {}) into {}",
        outcome.kept.len(),
        outcome.generated(),
        outcome.threshold,
        out.display()
    );
    record_timing(common, "filter", start)
}

pub fn compose(
    common: &Common,
    rasters: &[PathBuf],
    sources: &Path,
    mask_dir: &Path,
    background: &str,
    out: &Path,
) -> CliResult {
    let start = Instant::now();
    let config = load(common)?;
    let sources = records::read_sources(sources)?;
    let size_table: Vec<_> = sources.iter().map(|s| s.size_entry).collect();
    if size_table.is_empty() {
        return Err(CliError::new("usage", "sources file has no size entries"));
    }
    std::fs::create_dir_all(mask_dir)?;

    let mut cleaned = Vec::with_capacity(rasters.len());
    for (index, raster_path) in rasters.iter().enumerate() {
        let raster = pbm::read_raster(raster_path)?;
        let mask = morph_cleanup(&extract_mask(
            &raster,
            config.compose.mono_color,
            config.compose.tolerance,
        ));
        let stem = raster_path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| format!("raster-{index}"));
        let mask_path = mask_dir.join(format!("{stem}.pbm"));
        pbm::write_mask(&mask_path, &mask)?;
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_indexed_seed(config.seed, "resize", index as u64));
        let scale = resize_factor(&mask, &size_table, &mut rng)?;
        cleaned.push((mask, scale));
    }

    let canvas = (config.compose.canvas_width, config.compose.canvas_height);
    let mut specs: Vec<PlacementSpec> = Vec::new();
    let mut chunks = cleaned.chunks_exact(2);
    for (pair_index, pair) in chunks.by_ref().enumerate() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_indexed_seed(config.seed, "place", pair_index as u64));
        specs.push(place_with_occlusion(
            (&pair[0].0, pair[0].1),
            (&pair[1].0, pair[1].1),
            canvas,
            background,
            config.compose.occlusion_rule,
            &mut rng,
            config.compose.max_tries,
        )?);
    }
    if let [(mask, scale)] = chunks.remainder() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "place-single"));
        specs.push(place_single(mask, *scale, canvas, background, &mut rng)?);
    }
    records::write_placements(out, &specs)?;
    println!(
        "composed {} placement specs ({} masks) into {}",
        specs.len(),
        rasters.len(),
        out.display()
    );
    record_timing(common, "compose", start)
}

pub fn stats(
    common: &Common,
    set: Option<PathBuf>,
    filtered: Option<PathBuf>,
    out: Option<PathBuf>,
) -> CliResult {
    let config = load(common)?;
    let skeleton = Skeleton::h36m17();
    let _ = config;

    let (generated, kept, rejected) = match &filtered {
        Some(path) => {
            let (header, _) = records::read_filtered(path)?;
            (
                header.generated as u64,
                header.kept as u64,
                header.rejected as u64,
            )
        }
        None => (0, 0, 0),
    };

    let (min_pairwise, histogram) = match &set {
        Some(path) => {
            let set = posefile::read_pose_set(path, &skeleton)?;
            let min = set
                .min_pairwise_distance()
                .map_err(|e| CliError::new("stats", e))?;
            let counts = set
                .distance_histogram(20)
                .map_err(|e| CliError::new("stats", e))?;
            (Some(min), RunStats::buckets_from_counts(&counts))
        }
        None => (None, Vec::new()),
    };

    let timings = match &common.timings {
        Some(path) if path.exists() => std::fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let (stage, seconds) = line
                    .split_once(',')
                    .ok_or_else(|| CliError::new("stats", format!("bad timing row {line:?}")))?;
                Ok(StageTiming {
                    stage: stage.to_string(),
                    seconds: seconds.trim().parse().map_err(|e| {
                        CliError::new("stats", format!("bad timing value {seconds:?}: {e}"))
                    })?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        _ => Vec::new(),
    };

    let stats = RunStats::new(generated, kept, rejected, min_pairwise, histogram, timings)?;
    let text = stats.to_csv();
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
