//! Binary masks, mono-color mask extraction, and morphological cleanup.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MaskError {
    #[error("mask dimensions must be positive, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("pixel buffer has {got} entries, expected {expected}")]
    BufferMismatch { got: usize, expected: usize },
    #[error("mask is empty (no set pixels)")]
    EmptyMask,
}

/// RGB raster image.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        if pixels.len() != width * height {
            return Err(MaskError::BufferMismatch {
                got: pixels.len(),
                expected: width * height,
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self, MaskError> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, color: [u8; 3]) {
        self.pixels[y * self.width + x] = color;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// Bit grid; `true` marks foreground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn blank(width: usize, height: usize) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        Ok(Self {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        if bits.len() != width * height {
            return Err(MaskError::BufferMismatch {
                got: bits.len(),
                expected: width * height,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Tight bounding box of set pixels as `(x, y, width, height)`.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut min_x = usize::MAX;
        let mut min_y = usize::MAX;
        let mut max_x = 0;
        let mut max_y = 0;
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    any = true;
                    min_x = min_x.min(x);
                    min_y = min_y.min(y);
                    max_x = max_x.max(x);
                    max_y = max_y.max(y);
                }
            }
        }
        any.then(|| (min_x, min_y, max_x - min_x + 1, max_y - min_y + 1))
    }
}

/// Foreground = pixels whose RGB distance from the mono background color
/// exceeds `tolerance`.
pub fn extract_mask(raster: &Raster, mono_color: [u8; 3], tolerance: f64) -> BinaryMask {
    let bits = raster
        .pixels()
        .iter()
        .map(|&pixel| color_distance(pixel, mono_color) > tolerance)
        .collect();
    BinaryMask::from_bits(raster.width(), raster.height(), bits)
        .expect("raster dimensions are valid")
}

fn color_distance(a: [u8; 3], b: [u8; 3]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Dilation with the full 3x3 structuring element.
pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    neighborhood_pass(mask, |any_set, _all_set| any_set)
}

/// Erosion with the full 3x3 structuring element. Out-of-grid neighbors are
/// ignored (the element is clipped at the border), so a fully set mask stays
/// fully set.
pub fn erode(mask: &BinaryMask) -> BinaryMask {
    neighborhood_pass(mask, |_any_set, all_set| all_set)
}

fn neighborhood_pass(mask: &BinaryMask, keep: impl Fn(bool, bool) -> bool) -> BinaryMask {
    let mut out = BinaryMask::blank(mask.width(), mask.height()).expect("dimensions are valid");
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let mut any_set = false;
            let mut all_set = true;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= mask.width() as i64 || ny >= mask.height() as i64 {
                        continue;
                    }
                    if mask.get(nx as usize, ny as usize) {
                        any_set = true;
                    } else {
                        all_set = false;
                    }
                }
            }
            out.set(x, y, keep(any_set, all_set));
        }
    }
    out
}

/// Segmentation-mask cleanup: four dilations followed by two erosions, 3x3
/// structuring element.
pub fn morph_cleanup(mask: &BinaryMask) -> BinaryMask {
    let mut current = mask.clone();
    for _ in 0..4 {
        current = dilate(&current);
    }
    for _ in 0..2 {
        current = erode(&current);
    }
    current
}
