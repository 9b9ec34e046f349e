//! Generates demo inputs for the README walkthrough: two source records
//! (projected canonical poses under oblique cameras) and two mono-background
//! rasters with colored figures for the compose stage.
//!
//! Usage: cargo run -p posediv-cli --example make_demo_inputs -- <out-dir>

use posediv_core::camera::{project_to_2d, transform_to_camera, CameraPose, ProjectionConfig};
use posediv_core::formats::{pbm, records};
use posediv_core::pipeline::{Raster, SizeEntry, SourceRecord};
use posediv_core::skeleton::{canonical_crouch, canonical_standing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "demo-inputs".to_string());
    let out_dir = std::path::PathBuf::from(out_dir);
    std::fs::create_dir_all(&out_dir)?;

    let projection = ProjectionConfig::default();
    let poses = [canonical_standing(), canonical_crouch()];
    let cameras = [
        CameraPose::new([4.0, 2.0, 3.0], [0.0, 0.9, 0.0], [0.0, 1.0, 0.0])?,
        CameraPose::new([-3.0, 2.5, 4.0], [0.0, 0.8, 0.0], [0.0, 1.0, 0.0])?,
    ];
    let sizes = [
        SizeEntry {
            width: 34,
            height: 78,
        },
        SizeEntry {
            width: 46,
            height: 52,
        },
    ];
    let mut sources = Vec::new();
    for (index, ((pose, camera), size_entry)) in poses.iter().zip(&cameras).zip(sizes).enumerate() {
        let estimated_pose = project_to_2d(&transform_to_camera(pose, camera)?, &projection)?;
        sources.push(SourceRecord {
            image_ref: format!("demo-{index:03}"),
            estimated_pose,
            camera: camera.clone(),
            human_mask_ref: format!("demo-{index:03}.mask"),
            size_entry,
        });
    }
    let sources_path = out_dir.join("sources.jsonl");
    records::write_sources(&sources_path, &sources)?;
    println!("wrote {}", sources_path.display());

    let gray = [128u8, 128, 128];
    for (index, (x0, y0, w, h)) in [(6usize, 4usize, 10usize, 18usize), (12, 9, 14, 11)]
        .iter()
        .enumerate()
    {
        let mut raster = Raster::filled(32, 32, gray)?;
        for y in *y0..y0 + h {
            for x in *x0..x0 + w {
                raster.set_pixel(x, y, [60, 110, 210]);
            }
        }
        let path = out_dir.join(format!("generated-{index}.ppm"));
        pbm::write_raster(&path, &raster)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
