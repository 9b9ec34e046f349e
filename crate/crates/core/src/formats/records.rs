//! Line-delimited JSON record files: one header record carrying the schema
//! tag (plus config snapshot where relevant), then one record per line.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::pipeline::{
    FilterOutcome, FilteredStep, JobResult, PlacementSpec, SourceRecord, TranslationManifest,
};

use super::FormatError;

pub const SOURCES_SCHEMA: &str = "sources v1";
pub const MANIFEST_SCHEMA: &str = "manifest v1";
pub const RESULTS_SCHEMA: &str = "results v1";
pub const FILTERED_SCHEMA: &str = "filtered v1";
pub const PLACEMENTS_SCHEMA: &str = "placements v1";

fn write_jsonl<H: Serialize, T: Serialize>(
    path: &Path,
    header: &H,
    items: impl IntoIterator<Item = T>,
) -> Result<(), FormatError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut file, header)?;
    file.write_all(b"\n")?;
    for item in items {
        serde_json::to_writer(&mut file, &item)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}

fn read_jsonl<H: DeserializeOwned, T: DeserializeOwned>(
    path: &Path,
    expected_schema: &str,
) -> Result<(H, Vec<T>), FormatError> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| FormatError::parse(path, 1, "empty file"))??;

    #[derive(Deserialize)]
    struct SchemaProbe {
        schema: String,
    }
    let probe: SchemaProbe = serde_json::from_str(&header_line)?;
    if probe.schema != expected_schema {
        return Err(FormatError::SchemaMismatch {
            expected: expected_schema.to_string(),
            found: probe.schema,
        });
    }
    let header: H = serde_json::from_str(&header_line)?;
    let mut items = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line)?);
    }
    Ok((header, items))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourcesHeader {
    pub schema: String,
    pub count: usize,
}

pub fn write_sources(path: &Path, sources: &[SourceRecord]) -> Result<(), FormatError> {
    write_jsonl(
        path,
        &SourcesHeader {
            schema: SOURCES_SCHEMA.to_string(),
            count: sources.len(),
        },
        sources,
    )
}

pub fn read_sources(path: &Path) -> Result<Vec<SourceRecord>, FormatError> {
    let (_, sources): (SourcesHeader, Vec<SourceRecord>) = read_jsonl(path, SOURCES_SCHEMA)?;
    Ok(sources)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub job_count: usize,
}

pub fn write_manifest(
    path: &Path,
    manifest: &TranslationManifest,
    config: &PipelineConfig,
) -> Result<(), FormatError> {
    write_jsonl(
        path,
        &ManifestHeader {
            schema: MANIFEST_SCHEMA.to_string(),
            seed: manifest.seed,
            config_hash: config.content_hash(),
            config: config.clone(),
            job_count: manifest.jobs.len(),
        },
        &manifest.jobs,
    )
}

pub fn read_manifest(path: &Path) -> Result<(ManifestHeader, TranslationManifest), FormatError> {
    let (header, jobs): (ManifestHeader, Vec<_>) = read_jsonl(path, MANIFEST_SCHEMA)?;
    let manifest = TranslationManifest {
        seed: header.seed,
        jobs,
    };
    Ok((header, manifest))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsHeader {
    pub schema: String,
    pub config_hash: String,
    pub job_count: usize,
}

pub fn write_results(
    path: &Path,
    results: &[JobResult],
    config_hash: &str,
) -> Result<(), FormatError> {
    write_jsonl(
        path,
        &ResultsHeader {
            schema: RESULTS_SCHEMA.to_string(),
            config_hash: config_hash.to_string(),
            job_count: results.len(),
        },
        results,
    )
}

pub fn read_results(path: &Path) -> Result<Vec<JobResult>, FormatError> {
    let (_, results): (ResultsHeader, Vec<JobResult>) = read_jsonl(path, RESULTS_SCHEMA)?;
    Ok(results)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilteredHeader {
    pub schema: String,
    pub threshold: f64,
    pub generated: usize,
    pub kept: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilteredLine {
    pub kept: bool,
    #[serde(flatten)]
    pub step: FilteredStep,
}

pub fn write_filtered(path: &Path, outcome: &FilterOutcome) -> Result<(), FormatError> {
    let lines = outcome
        .kept
        .iter()
        .map(|step| FilteredLine {
            kept: true,
            step: step.clone(),
        })
        .chain(outcome.rejected.iter().map(|step| FilteredLine {
            kept: false,
            step: step.clone(),
        }));
    write_jsonl(
        path,
        &FilteredHeader {
            schema: FILTERED_SCHEMA.to_string(),
            threshold: outcome.threshold,
            generated: outcome.generated(),
            kept: outcome.kept.len(),
            rejected: outcome.rejected.len(),
        },
        lines,
    )
}

pub fn read_filtered(path: &Path) -> Result<(FilteredHeader, FilterOutcome), FormatError> {
    let (header, lines): (FilteredHeader, Vec<FilteredLine>) = read_jsonl(path, FILTERED_SCHEMA)?;
    let mut outcome = FilterOutcome {
        threshold: header.threshold,
        kept: Vec::new(),
        rejected: Vec::new(),
    };
    for line in lines {
        if line.kept {
            outcome.kept.push(line.step);
        } else {
            outcome.rejected.push(line.step);
        }
    }
    Ok((header, outcome))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementsHeader {
    pub schema: String,
    pub count: usize,
}

pub fn write_placements(path: &Path, specs: &[PlacementSpec]) -> Result<(), FormatError> {
    write_jsonl(
        path,
        &PlacementsHeader {
            schema: PLACEMENTS_SCHEMA.to_string(),
            count: specs.len(),
        },
        specs,
    )
}

pub fn read_placements(path: &Path) -> Result<Vec<PlacementSpec>, FormatError> {
    let (_, specs): (PlacementsHeader, Vec<PlacementSpec>) = read_jsonl(path, PLACEMENTS_SCHEMA)?;
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraPose;
    use crate::pipeline::{JobStatus, SizeEntry, StepResult};
    use crate::pose::Pose2D;
    use tempfile::tempdir;

    fn pose2d() -> Pose2D {
        Pose2D::new(
            (0..17)
                .map(|i| [i as f64 * 0.3, 1.0 - i as f64 * 0.1])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn sources_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sources.jsonl");
        let sources = vec![SourceRecord {
            image_ref: "img-000".to_string(),
            estimated_pose: pose2d(),
            camera: CameraPose::new([4.0, 2.0, 3.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0]).unwrap(),
            human_mask_ref: "img-000.mask".to_string(),
            size_entry: SizeEntry {
                width: 40,
                height: 90,
            },
        }];
        write_sources(&path, &sources).unwrap();
        assert_eq!(read_sources(&path).unwrap(), sources);
    }

    #[test]
    fn results_round_trip_including_failures() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("results.jsonl");
        let results = vec![JobResult {
            job_id: "img#0".to_string(),
            status: JobStatus::FailedAtStep {
                step_index: 1,
                message: "boom".to_string(),
            },
            steps: vec![StepResult {
                step_index: 0,
                generated_ref: "gen/img#0/0".to_string(),
                target_pose_2d: pose2d(),
                estimated_pose: None,
                estimator_error: Some("nope".to_string()),
            }],
        }];
        write_results(&path, &results, "hash").unwrap();
        assert_eq!(read_results(&path).unwrap(), results);
    }

    #[test]
    fn schema_mismatch_is_detected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("wrong.jsonl");
        write_results(&path, &[], "hash").unwrap();
        assert!(matches!(
            read_sources(&path).unwrap_err(),
            FormatError::SchemaMismatch { .. }
        ));
    }

    #[test]
    fn filtered_partition_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("filtered.jsonl");
        let outcome = FilterOutcome {
            threshold: 0.1,
            kept: vec![FilteredStep {
                job_id: "a#0".to_string(),
                step_index: 0,
                generated_ref: "gen/a#0/0".to_string(),
                distance: Some(0.05),
                reject_reason: None,
            }],
            rejected: vec![FilteredStep {
                job_id: "a#0".to_string(),
                step_index: 1,
                generated_ref: "gen/a#0/1".to_string(),
                distance: Some(0.32),
                reject_reason: Some(crate::pipeline::RejectReason::DistanceAboveThreshold),
            }],
        };
        write_filtered(&path, &outcome).unwrap();
        let (header, loaded) = read_filtered(&path).unwrap();
        assert_eq!(header.generated, 2);
        assert_eq!(loaded, outcome);
    }
}
