//! Portable bitmap (P1) masks and portable pixmap (P3) rasters, plain ASCII
//! variants.

use std::fmt::Write as _;
use std::path::Path;

use crate::pipeline::{BinaryMask, Raster};

use super::FormatError;

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<(), FormatError> {
    let mut out = String::new();
    out.push_str("P1\n");
    let _ = writeln!(out, "{} {}", mask.width(), mask.height());
    for y in 0..mask.height() {
        let row: Vec<&str> = (0..mask.width())
            .map(|x| if mask.get(x, y) { "1" } else { "0" })
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(|line| line.split_whitespace())
}

pub fn read_mask(path: &Path) -> Result<BinaryMask, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let mut tokens = tokens(&text);
    match tokens.next() {
        Some("P1") => {}
        other => {
            return Err(FormatError::SchemaMismatch {
                expected: "P1".to_string(),
                found: other.unwrap_or("").to_string(),
            })
        }
    }
    let width: usize = tokens
        .next()
        .ok_or_else(|| FormatError::parse(path, 0, "missing width"))?
        .parse()
        .map_err(|e| FormatError::parse(path, 0, format!("width: {e}")))?;
    let height: usize = tokens
        .next()
        .ok_or_else(|| FormatError::parse(path, 0, "missing height"))?
        .parse()
        .map_err(|e| FormatError::parse(path, 0, format!("height: {e}")))?;
    let mut bits = Vec::with_capacity(width * height);
    for token in tokens {
        match token {
            "0" => bits.push(false),
            "1" => bits.push(true),
            other => {
                return Err(FormatError::parse(
                    path,
                    0,
                    format!("unexpected bitmap token {other:?}"),
                ))
            }
        }
    }
    BinaryMask::from_bits(width, height, bits)
        .map_err(|e| FormatError::parse(path, 0, e.to_string()))
}

pub fn write_raster(path: &Path, raster: &Raster) -> Result<(), FormatError> {
    let mut out = String::new();
    out.push_str("P3\n");
    let _ = writeln!(out, "{} {}", raster.width(), raster.height());
    out.push_str("255\n");
    for y in 0..raster.height() {
        let mut row = String::new();
        for x in 0..raster.width() {
            let [r, g, b] = raster.pixel(x, y);
            if x > 0 {
                row.push(' ');
            }
            let _ = write!(row, "{r} {g} {b}");
        }
        let _ = writeln!(out, "{row}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_raster(path: &Path) -> Result<Raster, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let mut tokens = tokens(&text);
    match tokens.next() {
        Some("P3") => {}
        other => {
            return Err(FormatError::SchemaMismatch {
                expected: "P3".to_string(),
                found: other.unwrap_or("").to_string(),
            })
        }
    }
    let mut parse_next = |what: &str| -> Result<usize, FormatError> {
        tokens
            .next()
            .ok_or_else(|| FormatError::parse(path, 0, format!("missing {what}")))?
            .parse()
            .map_err(|e| FormatError::parse(path, 0, format!("{what}: {e}")))
    };
    let width = parse_next("width")?;
    let height = parse_next("height")?;
    let maxval = parse_next("maxval")?;
    if maxval != 255 {
        return Err(FormatError::parse(path, 0, "only maxval 255 is supported"));
    }
    let mut pixels = Vec::with_capacity(width * height);
    let mut channel = [0u8; 3];
    let mut filled = 0;
    for _ in 0..width * height * 3 {
        channel[filled] = parse_next("channel value")? as u8;
        filled += 1;
        if filled == 3 {
            pixels.push(channel);
            filled = 0;
        }
    }
    Raster::new(width, height, pixels).map_err(|e| FormatError::parse(path, 0, e.to_string()))
}
