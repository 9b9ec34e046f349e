//! Resizing against a source size table and occlusion-aware placement of
//! generated humans onto a background canvas.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mask::BinaryMask;

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("mask has no set pixels, cannot derive a bounding box")]
    EmptyMask,
    #[error("size table is empty")]
    EmptySizeTable,
    #[error("size entry must be positive, got {width}x{height}")]
    BadSizeEntry { width: u32, height: u32 },
    #[error(
        "scaled human ({width}x{height}) does not fit the {canvas_width}x{canvas_height} canvas"
    )]
    DoesNotFit {
        width: u32,
        height: u32,
        canvas_width: u32,
        canvas_height: u32,
    },
    #[error("no valid placement found in {tries} tries (canvas too small relative to the humans)")]
    TriesExhausted { tries: usize },
}

/// Human bounding-box size in pixels, drawn from the original dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeEntry {
    pub width: u32,
    pub height: u32,
}

impl SizeEntry {
    pub fn validate(&self) -> Result<(), PlacementError> {
        if self.width == 0 || self.height == 0 {
            return Err(PlacementError::BadSizeEntry {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    pub fn longer_side(&self) -> u32 {
        self.width.max(self.height)
    }
}

/// Scale factor that makes the longer side of the mask's tight bounding box
/// match the longer side of a uniformly sampled size-table entry. Aspect
/// ratio is preserved by contract: the single factor applies to both axes.
pub fn resize_factor<R: Rng + ?Sized>(
    mask: &BinaryMask,
    size_table: &[SizeEntry],
    rng: &mut R,
) -> Result<f64, PlacementError> {
    if size_table.is_empty() {
        return Err(PlacementError::EmptySizeTable);
    }
    let (_, _, width, height) = mask.bounding_box().ok_or(PlacementError::EmptyMask)?;
    let entry = size_table[rng.gen_range(0..size_table.len())];
    entry.validate()?;
    let mask_longer = width.max(height) as f64;
    Ok(entry.longer_side() as f64 / mask_longer)
}

/// Which vertical measure decides who occludes whom: the bounding-box bottom
/// edge (default) or the box center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionRule {
    #[default]
    BottomEdge,
    CenterY,
}

/// One placed human: pixel bounding box, the scale it was resized by, and
/// its stacking order (higher draws in front).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedHuman {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub scale: f64,
    pub z_order: u32,
}

impl PlacedHuman {
    pub fn bottom(&self) -> u32 {
        self.y + self.height
    }

    pub fn overlap_area(&self, other: &PlacedHuman) -> u64 {
        let x0 = self.x.max(other.x) as i64;
        let x1 = (self.x + self.width).min(other.x + other.width) as i64;
        let y0 = self.y.max(other.y) as i64;
        let y1 = (self.y + self.height).min(other.y + other.height) as i64;
        ((x1 - x0).max(0) * (y1 - y0).max(0)) as u64
    }
}

/// Placement of one or two humans on a background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSpec {
    pub background_ref: String,
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub humans: Vec<PlacedHuman>,
}

fn scaled_box(mask: &BinaryMask, scale: f64) -> Result<(u32, u32), PlacementError> {
    let (_, _, width, height) = mask.bounding_box().ok_or(PlacementError::EmptyMask)?;
    let w = ((width as f64 * scale).round() as u32).max(1);
    let h = ((height as f64 * scale).round() as u32).max(1);
    Ok((w, h))
}

fn check_fit(
    (width, height): (u32, u32),
    (canvas_width, canvas_height): (u32, u32),
) -> Result<(), PlacementError> {
    if width > canvas_width || height > canvas_height {
        return Err(PlacementError::DoesNotFit {
            width,
            height,
            canvas_width,
            canvas_height,
        });
    }
    Ok(())
}

/// Uniform placement of a single human inside the canvas (occlusion
/// disabled).
pub fn place_single<R: Rng + ?Sized>(
    mask: &BinaryMask,
    scale: f64,
    canvas: (u32, u32),
    background_ref: impl Into<String>,
    rng: &mut R,
) -> Result<PlacementSpec, PlacementError> {
    let size = scaled_box(mask, scale)?;
    check_fit(size, canvas)?;
    let x = rng.gen_range(0..=canvas.0 - size.0);
    let y = rng.gen_range(0..=canvas.1 - size.1);
    Ok(PlacementSpec {
        background_ref: background_ref.into(),
        canvas_width: canvas.0,
        canvas_height: canvas.1,
        humans: vec![PlacedHuman {
            x,
            y,
            width: size.0,
            height: size.1,
            scale,
            z_order: 0,
        }],
    })
}

fn vertical_measure(human: &PlacedHuman, rule: OcclusionRule) -> f64 {
    match rule {
        OcclusionRule::BottomEdge => human.bottom() as f64,
        OcclusionRule::CenterY => human.y as f64 + human.height as f64 / 2.0,
    }
}

/// Rejection-sample positions for two humans until their boxes overlap and
/// one sits strictly lower than the other (per `rule`). The lower human
/// becomes the occluder and is assigned the front stacking order.
pub fn place_with_occlusion<R: Rng + ?Sized>(
    first: (&BinaryMask, f64),
    second: (&BinaryMask, f64),
    canvas: (u32, u32),
    background_ref: impl Into<String>,
    rule: OcclusionRule,
    rng: &mut R,
    max_tries: usize,
) -> Result<PlacementSpec, PlacementError> {
    let size_a = scaled_box(first.0, first.1)?;
    let size_b = scaled_box(second.0, second.1)?;
    check_fit(size_a, canvas)?;
    check_fit(size_b, canvas)?;

    for _ in 0..max_tries {
        let ax = rng.gen_range(0..=canvas.0 - size_a.0);
        let ay = rng.gen_range(0..=canvas.1 - size_a.1);
        let bx = rng.gen_range(0..=canvas.0 - size_b.0);
        let by = rng.gen_range(0..=canvas.1 - size_b.1);
        let mut a = PlacedHuman {
            x: ax,
            y: ay,
            width: size_a.0,
            height: size_a.1,
            scale: first.1,
            z_order: 0,
        };
        let mut b = PlacedHuman {
            x: bx,
            y: by,
            width: size_b.0,
            height: size_b.1,
            scale: second.1,
            z_order: 0,
        };
        if a.overlap_area(&b) == 0 || vertical_measure(&a, rule) == vertical_measure(&b, rule) {
            continue;
        }
        if vertical_measure(&a, rule) > vertical_measure(&b, rule) {
            a.z_order = 1;
        } else {
            b.z_order = 1;
        }
        return Ok(PlacementSpec {
            background_ref: background_ref.into(),
            canvas_width: canvas.0,
            canvas_height: canvas.1,
            humans: vec![a, b],
        });
    }
    Err(PlacementError::TriesExhausted { tries: max_tries })
}
