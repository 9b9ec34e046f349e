//! Flat parameter file for the trained denoiser: shape header followed by
//! one parameter per line.

use std::fmt::Write as _;
use std::path::Path;

use crate::diffusion::ToyDenoiser;

use super::FormatError;

pub const SCHEMA: &str = "denoiser v1";

pub fn write_denoiser(path: &Path, denoiser: &ToyDenoiser) -> Result<(), FormatError> {
    let mut out = String::new();
    out.push_str(SCHEMA);
    out.push('\n');
    out.push_str("arch toy\n");
    let _ = writeln!(
        out,
        "joints {}",
        crate::diffusion::Denoiser::joint_count(denoiser)
    );
    let _ = writeln!(out, "hidden {}", denoiser.hidden_width());
    let _ = writeln!(out, "time_embed {}", denoiser.time_embed_dim());
    let _ = writeln!(out, "params {}", denoiser.params().len());
    for param in denoiser.params() {
        let _ = writeln!(out, "{param}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_denoiser(path: &Path) -> Result<ToyDenoiser, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let mut expect = |keyword: &str| -> Result<String, FormatError> {
        let (index, line) = lines
            .next()
            .ok_or_else(|| FormatError::parse(path, 0, "unexpected end of file"))?;
        let line = line.trim();
        if keyword.is_empty() {
            return Ok(line.to_string());
        }
        line.strip_prefix(keyword)
            .map(|rest| rest.trim().to_string())
            .ok_or_else(|| {
                FormatError::parse(path, index + 1, format!("expected {keyword:?} line"))
            })
    };

    let schema = expect("")?;
    if schema != SCHEMA {
        return Err(FormatError::SchemaMismatch {
            expected: SCHEMA.to_string(),
            found: schema,
        });
    }
    let arch = expect("arch")?;
    if arch != "toy" {
        return Err(FormatError::parse(
            path,
            2,
            format!("unknown arch {arch:?}"),
        ));
    }
    let joints: usize = expect("joints")?
        .parse()
        .map_err(|e| FormatError::parse(path, 3, format!("joints: {e}")))?;
    let hidden: usize = expect("hidden")?
        .parse()
        .map_err(|e| FormatError::parse(path, 4, format!("hidden: {e}")))?;
    let time_embed: usize = expect("time_embed")?
        .parse()
        .map_err(|e| FormatError::parse(path, 5, format!("time_embed: {e}")))?;
    let count: usize = expect("params")?
        .parse()
        .map_err(|e| FormatError::parse(path, 6, format!("params: {e}")))?;

    let mut params = Vec::with_capacity(count);
    for (index, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        params.push(
            line.parse::<f64>()
                .map_err(|e| FormatError::parse(path, index + 1, e.to_string()))?,
        );
    }
    if params.len() != count {
        return Err(FormatError::parse(
            path,
            0,
            format!("expected {count} parameters, found {}", params.len()),
        ));
    }
    ToyDenoiser::from_params(joints, hidden, time_embed, params)
        .map_err(|e| FormatError::parse(path, 0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn denoiser_round_trips_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("denoiser.params");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let denoiser = ToyDenoiser::init(17, 32, 8, &mut rng);
        write_denoiser(&path, &denoiser).unwrap();
        let loaded = read_denoiser(&path).unwrap();
        assert_eq!(loaded, denoiser);
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("short.params");
        std::fs::write(
            &path,
            format!("{SCHEMA}\narch toy\njoints 17\nhidden 4\ntime_embed 2\nparams 10\n1.0\n2.0\n"),
        )
        .unwrap();
        assert!(matches!(
            read_denoiser(&path).unwrap_err(),
            FormatError::Parse { .. }
        ));
    }
}
