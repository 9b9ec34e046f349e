//! Structured-text pose files.
//!
//! ```text
//! poseset v1
//! skeleton h36m17
//! joints 17 3
//! joint_order pelvis hip_right ... wrist_right
//! meta seed 42
//! pose 0
//! camera px py pz lx ly lz ux uy uz
//! x y z            (one line per joint)
//! ...
//! ```
//!
//! Floats are written in shortest round-trip form, so write-then-read is
//! identity on the in-memory value.

use std::fmt::Write as _;
use std::path::Path;

use crate::camera::CameraPose;
use crate::novel_set::{NovelPoseSet, NovelSetConfig, SetProvenance};
use crate::pose::{Pose2D, Pose3D};
use crate::skeleton::Skeleton;

use super::FormatError;

pub const SCHEMA: &str = "poseset v1";

/// One pose entry: 3D or 2D coordinates plus optional camera metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEntry {
    pub id: String,
    pub camera: Option<CameraPose>,
    pub coords: PoseCoords,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PoseCoords {
    ThreeD(Pose3D),
    TwoD(Pose2D),
}

/// Parsed pose file: skeleton name, coordinate dimension, free-form metadata
/// lines, and the poses.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFile {
    pub skeleton_name: String,
    pub dim: usize,
    pub metas: Vec<(String, String)>,
    pub entries: Vec<PoseEntry>,
}

impl PoseFile {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metas
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn render(
    skeleton: &Skeleton,
    dim: usize,
    metas: &[(String, String)],
    entries: &[PoseEntry],
) -> String {
    let mut out = String::new();
    out.push_str(SCHEMA);
    out.push('\n');
    out.push_str("skeleton h36m17\n");
    let _ = writeln!(out, "joints {} {}", skeleton.joint_count(), dim);
    let _ = writeln!(out, "joint_order {}", skeleton.joint_names().join(" "));
    for (key, value) in metas {
        let _ = writeln!(out, "meta {key} {value}");
    }
    for entry in entries {
        let _ = writeln!(out, "pose {}", entry.id);
        if let Some(camera) = &entry.camera {
            let p = camera.position();
            let l = camera.look_at();
            let u = camera.up();
            let _ = writeln!(
                out,
                "camera {} {} {} {} {} {} {} {} {}",
                p.x, p.y, p.z, l.x, l.y, l.z, u.x, u.y, u.z
            );
        }
        match &entry.coords {
            PoseCoords::ThreeD(pose) => {
                for row in pose.rows() {
                    let _ = writeln!(out, "{} {} {}", row[0], row[1], row[2]);
                }
            }
            PoseCoords::TwoD(pose) => {
                for row in pose.rows() {
                    let _ = writeln!(out, "{} {}", row[0], row[1]);
                }
            }
        }
    }
    out
}

pub fn write_pose_file(
    path: &Path,
    skeleton: &Skeleton,
    dim: usize,
    metas: &[(String, String)],
    entries: &[PoseEntry],
) -> Result<(), FormatError> {
    std::fs::write(path, render(skeleton, dim, metas, entries))?;
    Ok(())
}

pub fn read_pose_file(path: &Path, skeleton: &Skeleton) -> Result<PoseFile, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().peekable();

    let (line_no, first) = lines
        .next()
        .ok_or_else(|| FormatError::parse(path, 1, "empty file"))?;
    if first.trim() != SCHEMA {
        return Err(FormatError::SchemaMismatch {
            expected: SCHEMA.to_string(),
            found: first.trim().to_string(),
        });
    }
    let _ = line_no;

    let mut skeleton_name = String::new();
    let mut dim = 0usize;
    let mut joint_count = 0usize;
    let mut metas = Vec::new();
    let mut entries = Vec::new();

    while let Some((index, raw)) = lines.next() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        match keyword {
            "skeleton" => {
                skeleton_name = tokens.collect::<Vec<_>>().join(" ");
                if skeleton_name != "h36m17" {
                    return Err(FormatError::parse(
                        path,
                        line_no,
                        format!("unknown skeleton {skeleton_name:?}"),
                    ));
                }
            }
            "joints" => {
                joint_count = parse_token(path, line_no, tokens.next(), "joint count")?;
                dim = parse_token(path, line_no, tokens.next(), "dimension")?;
                if joint_count != skeleton.joint_count() {
                    return Err(FormatError::parse(
                        path,
                        line_no,
                        format!(
                            "file has {joint_count} joints, skeleton expects {}",
                            skeleton.joint_count()
                        ),
                    ));
                }
                if dim != 2 && dim != 3 {
                    return Err(FormatError::parse(
                        path,
                        line_no,
                        "dimension must be 2 or 3",
                    ));
                }
            }
            "joint_order" => {
                let names: Vec<&str> = tokens.collect();
                if names != skeleton.joint_names() {
                    return Err(FormatError::parse(path, line_no, "joint order mismatch"));
                }
            }
            "meta" => {
                let key = tokens
                    .next()
                    .ok_or_else(|| FormatError::parse(path, line_no, "meta key missing"))?;
                let value = tokens.collect::<Vec<_>>().join(" ");
                metas.push((key.to_string(), value));
            }
            "pose" => {
                if dim == 0 {
                    return Err(FormatError::parse(
                        path,
                        line_no,
                        "pose before joints header",
                    ));
                }
                let id = tokens.collect::<Vec<_>>().join(" ");
                let mut camera = None;
                if let Some((_, next)) = lines.peek() {
                    if next.trim().starts_with("camera ") {
                        let (cam_index, cam_line) = lines.next().unwrap();
                        camera = Some(parse_camera(path, cam_index + 1, cam_line.trim())?);
                    }
                }
                let mut rows3 = Vec::with_capacity(joint_count);
                let mut rows2 = Vec::with_capacity(joint_count);
                for _ in 0..joint_count {
                    let (row_index, row_line) = lines.next().ok_or_else(|| {
                        FormatError::parse(path, line_no, "unexpected end of file inside pose")
                    })?;
                    let values: Vec<f64> = row_line
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| FormatError::parse(path, row_index + 1, e.to_string()))?;
                    if values.len() != dim {
                        return Err(FormatError::parse(
                            path,
                            row_index + 1,
                            format!("expected {dim} coordinates, found {}", values.len()),
                        ));
                    }
                    if dim == 3 {
                        rows3.push([values[0], values[1], values[2]]);
                    } else {
                        rows2.push([values[0], values[1]]);
                    }
                }
                let coords = if dim == 3 {
                    PoseCoords::ThreeD(
                        Pose3D::new(rows3)
                            .map_err(|e| FormatError::parse(path, line_no, e.to_string()))?,
                    )
                } else {
                    PoseCoords::TwoD(
                        Pose2D::new(rows2)
                            .map_err(|e| FormatError::parse(path, line_no, e.to_string()))?,
                    )
                };
                entries.push(PoseEntry { id, camera, coords });
            }
            other => {
                return Err(FormatError::parse(
                    path,
                    line_no,
                    format!("unknown keyword {other:?}"),
                ));
            }
        }
    }
    Ok(PoseFile {
        skeleton_name,
        dim,
        metas,
        entries,
    })
}

fn parse_token<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    token: Option<&str>,
    what: &str,
) -> Result<T, FormatError>
where
    T::Err: std::fmt::Display,
{
    token
        .ok_or_else(|| FormatError::parse(path, line, format!("{what} missing")))?
        .parse::<T>()
        .map_err(|e| FormatError::parse(path, line, format!("{what}: {e}")))
}

fn parse_camera(path: &Path, line: usize, text: &str) -> Result<CameraPose, FormatError> {
    let values: Vec<f64> = text
        .trim_start_matches("camera")
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| FormatError::parse(path, line, e.to_string()))?;
    if values.len() != 9 {
        return Err(FormatError::parse(path, line, "camera needs 9 values"));
    }
    CameraPose::new(
        [values[0], values[1], values[2]],
        [values[3], values[4], values[5]],
        [values[6], values[7], values[8]],
    )
    .map_err(|e| FormatError::parse(path, line, e.to_string()))
}

/// Persist a novel pose set with its config and provenance embedded.
pub fn write_pose_set(
    path: &Path,
    set: &NovelPoseSet,
    config_hash: Option<&str>,
) -> Result<(), FormatError> {
    let config = set.config();
    let provenance = set.provenance();
    let mut metas = vec![
        ("kind".to_string(), "novel-set".to_string()),
        ("t_sim".to_string(), config.t_sim.to_string()),
        ("n_pos".to_string(), config.n_pos.to_string()),
        ("max_attempts".to_string(), config.max_attempts.to_string()),
        ("seed".to_string(), provenance.seed.to_string()),
    ];
    if !provenance.schedule_id.is_empty() {
        metas.push(("schedule".to_string(), provenance.schedule_id.clone()));
    }
    if let Some(hash) = config_hash {
        metas.push(("config_hash".to_string(), hash.to_string()));
    }
    let entries: Vec<PoseEntry> = set
        .poses()
        .iter()
        .enumerate()
        .map(|(index, pose)| PoseEntry {
            id: index.to_string(),
            camera: None,
            coords: PoseCoords::ThreeD(pose.clone()),
        })
        .collect();
    write_pose_file(path, set.skeleton(), 3, &metas, &entries)
}

/// Read a novel pose set back, reconstructing config and provenance from the
/// metadata lines (falling back to defaults when absent).
pub fn read_pose_set(path: &Path, skeleton: &Skeleton) -> Result<NovelPoseSet, FormatError> {
    let file = read_pose_file(path, skeleton)?;
    let defaults = NovelSetConfig::default();
    let parse_meta = |key: &str, fallback: f64| -> f64 {
        file.meta(key)
            .and_then(|v| v.parse::<f64>().ok())
            .unwrap_or(fallback)
    };
    let config = NovelSetConfig {
        t_sim: parse_meta("t_sim", defaults.t_sim),
        n_pos: file
            .meta("n_pos")
            .and_then(|v| v.parse().ok())
            .unwrap_or(defaults.n_pos),
        max_attempts: file
            .meta("max_attempts")
            .and_then(|v| v.parse().ok())
            .unwrap_or(defaults.max_attempts),
    };
    let provenance = SetProvenance {
        seed: file.meta("seed").and_then(|v| v.parse().ok()).unwrap_or(0),
        schedule_id: file.meta("schedule").unwrap_or("").to_string(),
    };
    let poses = file
        .entries
        .into_iter()
        .enumerate()
        .map(|(index, entry)| match entry.coords {
            PoseCoords::ThreeD(pose) => Ok(pose),
            PoseCoords::TwoD(_) => Err(FormatError::parse(
                path,
                0,
                format!("pose {index} is 2D, expected 3D"),
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;
    NovelPoseSet::from_poses(skeleton.clone(), config, provenance, poses)
        .map_err(|e| FormatError::parse(path, 0, e.to_string()))
}

/// Write a plain list of 3D poses (e.g. raw sampler output).
pub fn write_pose_list(
    path: &Path,
    skeleton: &Skeleton,
    poses: &[Pose3D],
    metas: &[(String, String)],
) -> Result<(), FormatError> {
    let entries: Vec<PoseEntry> = poses
        .iter()
        .enumerate()
        .map(|(index, pose)| PoseEntry {
            id: index.to_string(),
            camera: None,
            coords: PoseCoords::ThreeD(pose.clone()),
        })
        .collect();
    write_pose_file(path, skeleton, 3, metas, &entries)
}

pub fn read_pose_list(path: &Path, skeleton: &Skeleton) -> Result<Vec<Pose3D>, FormatError> {
    let file = read_pose_file(path, skeleton)?;
    file.entries
        .into_iter()
        .enumerate()
        .map(|(index, entry)| match entry.coords {
            PoseCoords::ThreeD(pose) => Ok(pose),
            PoseCoords::TwoD(_) => Err(FormatError::parse(
                path,
                0,
                format!("pose {index} is 2D, expected 3D"),
            )),
        })
        .collect()
}

/// Write one 2D pose (the target-pose handoff to an external translator).
pub fn write_single_pose_2d(
    path: &Path,
    skeleton: &Skeleton,
    pose: &Pose2D,
) -> Result<(), FormatError> {
    write_pose_file(
        path,
        skeleton,
        2,
        &[],
        &[PoseEntry {
            id: "0".to_string(),
            camera: None,
            coords: PoseCoords::TwoD(pose.clone()),
        }],
    )
}

pub fn read_single_pose_2d(path: &Path, skeleton: &Skeleton) -> Result<Pose2D, FormatError> {
    let file = read_pose_file(path, skeleton)?;
    match file.entries.into_iter().next() {
        Some(PoseEntry {
            coords: PoseCoords::TwoD(pose),
            ..
        }) => Ok(pose),
        Some(_) => Err(FormatError::parse(path, 0, "expected a 2D pose")),
        None => Err(FormatError::parse(path, 0, "file contains no poses")),
    }
}
