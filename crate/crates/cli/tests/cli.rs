//! End-to-end tests of the `posediv` binary: full pipeline chain with the
//! zero-noise mock, determinism of reruns, stats surfacing, and error
//! records.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use posediv_core::camera::{project_to_2d, transform_to_camera, CameraPose, ProjectionConfig};
use posediv_core::formats::{pbm, posefile, records};
use posediv_core::pipeline::{Raster, SizeEntry, SourceRecord};
use posediv_core::pose::Pose3D;
use posediv_core::skeleton::{canonical_standing, Skeleton};
use posediv_core::stats::RunStats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_posediv"))
}

fn run_ok(args: &[&str]) -> Output {
    let output = binary().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn run_err(args: &[&str]) -> serde_json::Value {
    let output = binary().args(args).output().expect("binary runs");
    assert!(
        !output.status.success(),
        "command {args:?} unexpectedly passed"
    );
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr
        .lines()
        .find(|l| l.starts_with('{'))
        .unwrap_or_else(|| panic!("no error record in stderr: {stderr}"));
    serde_json::from_str(line).expect("error record is valid json")
}

fn write_candidates(path: &Path, count: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses: Vec<Pose3D> = (0..count)
        .map(|_| {
            Pose3D::new(
                (0..17)
                    .map(|_| {
                        [
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        ]
                    })
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    posefile::write_pose_list(path, &Skeleton::h36m17(), &poses, &[]).unwrap();
}

fn write_source_records(path: &Path, count: usize) {
    let projection = ProjectionConfig::default();
    let sources: Vec<SourceRecord> = (0..count)
        .map(|i| {
            let camera = CameraPose::new(
                [4.0 + i as f64, 2.0, 3.0 - 0.4 * i as f64],
                [0.0, 0.9, 0.0],
                [0.0, 1.0, 0.0],
            )
            .unwrap();
            let estimated_pose = project_to_2d(
                &transform_to_camera(&canonical_standing(), &camera).unwrap(),
                &projection,
            )
            .unwrap();
            SourceRecord {
                image_ref: format!("src-{i:03}"),
                estimated_pose,
                camera,
                human_mask_ref: format!("src-{i:03}.mask"),
                size_entry: SizeEntry {
                    width: 30 + 4 * i as u32,
                    height: 60 + 6 * i as u32,
                },
            }
        })
        .collect();
    records::write_sources(path, &sources).unwrap();
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Chain {
    dir: tempfile::TempDir,
    config: PathBuf,
    sources: PathBuf,
    set: PathBuf,
}

/// Shared setup: config with a small set target, candidate poses, sources,
/// and a built set.
fn chain_setup(n_pos: usize, sources: usize, extra_config: &str) -> Chain {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        format!("seed = 11\n[novel_set]\nn_pos = {n_pos}\n{extra_config}"),
    )
    .unwrap();
    let candidates = dir.path().join("candidates.poses");
    write_candidates(&candidates, n_pos * 4, 7);
    let sources_path = dir.path().join("sources.jsonl");
    write_source_records(&sources_path, sources);
    let set = dir.path().join("set.poses");
    run_ok(&[
        "build-set",
        "--config",
        path_str(&config),
        "--from-poses",
        path_str(&candidates),
        "--out",
        path_str(&set),
    ]);
    Chain {
        dir,
        config,
        sources: sources_path,
        set,
    }
}

#[test]
fn full_chain_with_zero_noise_mock_keeps_everything() {
    let chain = chain_setup(30, 2, "");
    let dir = chain.dir.path();
    let timings = dir.join("timings.csv");

    let manifest = dir.join("manifest.jsonl");
    run_ok(&[
        "plan",
        "--config",
        path_str(&chain.config),
        "--sources",
        path_str(&chain.sources),
        "--set",
        path_str(&chain.set),
        "--out",
        path_str(&manifest),
        "--timings",
        path_str(&timings),
    ]);
    let (header, parsed) = records::read_manifest(&manifest).unwrap();
    assert_eq!(parsed.jobs.len(), 10, "2 sources x 5 finals");
    assert!(!header.config_hash.is_empty());

    let results = dir.join("results.jsonl");
    run_ok(&[
        "run",
        "--config",
        path_str(&chain.config),
        "--manifest",
        path_str(&manifest),
        "--out",
        path_str(&results),
        "--timings",
        path_str(&timings),
    ]);

    let filtered = dir.join("filtered.jsonl");
    run_ok(&[
        "filter",
        "--config",
        path_str(&chain.config),
        "--results",
        path_str(&results),
        "--out",
        path_str(&filtered),
        "--timings",
        path_str(&timings),
    ]);
    let (filter_header, outcome) = records::read_filtered(&filtered).unwrap();
    assert_eq!(
        filter_header.kept, filter_header.generated,
        "zero-noise keeps all"
    );
    assert!(outcome.rejected.is_empty());
    let planned_steps: usize = parsed.jobs.iter().map(|j| j.steps.len()).sum();
    assert_eq!(filter_header.generated, planned_steps);

    // stats sees the set invariant and the timing rows
    let stats_out = dir.join("stats.csv");
    run_ok(&[
        "stats",
        "--config",
        path_str(&chain.config),
        "--set",
        path_str(&chain.set),
        "--filtered",
        path_str(&filtered),
        "--timings",
        path_str(&timings),
        "--out",
        path_str(&stats_out),
    ]);
    let stats = RunStats::from_csv(&std::fs::read_to_string(&stats_out).unwrap()).unwrap();
    assert_eq!(stats.kept + stats.filtered, stats.generated);
    assert!(stats.min_pairwise_distance.unwrap() >= 0.24);
    let stages: Vec<&str> = stats.timings.iter().map(|t| t.stage.as_str()).collect();
    assert_eq!(stages, vec!["plan", "run", "filter"]);
}

#[test]
fn plan_is_byte_identical_across_reruns() {
    let chain = chain_setup(20, 1, "");
    let dir = chain.dir.path();
    let paths = [dir.join("a.jsonl"), dir.join("b.jsonl")];
    for path in &paths {
        run_ok(&[
            "plan",
            "--config",
            path_str(&chain.config),
            "--sources",
            path_str(&chain.sources),
            "--set",
            path_str(&chain.set),
            "--out",
            path_str(path),
        ]);
    }
    assert_eq!(
        std::fs::read(&paths[0]).unwrap(),
        std::fs::read(&paths[1]).unwrap()
    );
}

#[test]
fn noisy_mock_gets_filtered() {
    let chain = chain_setup(20, 1, "[adapter]\nnoise_amplitude = 0.05\n");
    let dir = chain.dir.path();
    let manifest = dir.join("manifest.jsonl");
    run_ok(&[
        "plan",
        "--config",
        path_str(&chain.config),
        "--sources",
        path_str(&chain.sources),
        "--set",
        path_str(&chain.set),
        "--out",
        path_str(&manifest),
    ]);
    let results = dir.join("results.jsonl");
    run_ok(&[
        "run",
        "--config",
        path_str(&chain.config),
        "--manifest",
        path_str(&manifest),
        "--out",
        path_str(&results),
    ]);
    let filtered = dir.join("filtered.jsonl");
    run_ok(&[
        "filter",
        "--config",
        path_str(&chain.config),
        "--results",
        path_str(&results),
        "--out",
        path_str(&filtered),
    ]);
    let (header, _) = records::read_filtered(&filtered).unwrap();
    assert!(
        header.rejected > 0,
        "expected the noisy mock to be filtered"
    );
}

#[test]
fn gen_poses_trains_samples_and_round_trips_denoiser() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        "seed = 3\n[schedule]\nsteps = 10\n[training]\niterations = 40\nbatch_size = 8\nhidden_width = 16\n",
    )
    .unwrap();
    let poses = dir.path().join("sampled.poses");
    let denoiser = dir.path().join("denoiser.params");
    run_ok(&[
        "gen-poses",
        "--config",
        path_str(&config),
        "--out",
        path_str(&poses),
        "--count",
        "5",
        "--save-denoiser",
        path_str(&denoiser),
    ]);
    let sampled = posefile::read_pose_list(&poses, &Skeleton::h36m17()).unwrap();
    assert_eq!(sampled.len(), 5);

    // reuse the saved denoiser: skips training, same seed, same samples
    let again = dir.path().join("again.poses");
    run_ok(&[
        "gen-poses",
        "--config",
        path_str(&config),
        "--out",
        path_str(&again),
        "--count",
        "5",
        "--load-denoiser",
        path_str(&denoiser),
    ]);
    let resampled = posefile::read_pose_list(&again, &Skeleton::h36m17()).unwrap();
    assert_eq!(sampled, resampled);
}

#[test]
fn build_set_exhaustion_writes_partial_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        "seed = 1\n[novel_set]\nn_pos = 5\nmax_attempts = 5\n",
    )
    .unwrap();
    // two distinct poses followed by duplicates: the rejection budget burns
    // out before the target size is reached
    let candidates = dir.path().join("candidates.poses");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let distinct: Vec<Pose3D> = (0..2)
        .map(|_| {
            Pose3D::new(
                (0..17)
                    .map(|_| {
                        [
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        ]
                    })
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let mut poses = distinct.clone();
    poses.extend(std::iter::repeat_n(distinct[0].clone(), 10));
    posefile::write_pose_list(&candidates, &Skeleton::h36m17(), &poses, &[]).unwrap();

    let set = dir.path().join("set.poses");
    let record = run_err(&[
        "build-set",
        "--config",
        path_str(&config),
        "--from-poses",
        path_str(&candidates),
        "--out",
        path_str(&set),
    ]);
    assert_eq!(record["error"]["stage"], "build-set");
    assert_eq!(record["error"]["kind"], "novel-set");
    assert!(
        record["error"]["message"]
            .as_str()
            .unwrap()
            .contains("budget exhausted"),
        "unexpected message: {record}"
    );
    // partial set persisted
    let partial = posefile::read_pose_set(&set, &Skeleton::h36m17()).unwrap();
    assert_eq!(partial.len(), 2);
}

#[test]
fn compose_writes_masks_and_valid_placements() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        "seed = 5\n[compose]\ncanvas_width = 128\ncanvas_height = 128\n",
    )
    .unwrap();
    let sources = dir.path().join("sources.jsonl");
    write_source_records(&sources, 2);

    // gray rasters with colored blobs
    let gray = [128u8, 128, 128];
    let mut raster_paths = Vec::new();
    for (index, (x0, y0, w, h)) in [(4usize, 3usize, 8usize, 14usize), (10, 8, 12, 9)]
        .iter()
        .enumerate()
    {
        let mut raster = Raster::filled(32, 32, gray).unwrap();
        for y in *y0..y0 + h {
            for x in *x0..x0 + w {
                raster.set_pixel(x, y, [200, 30, 40]);
            }
        }
        let path = dir.path().join(format!("gen-{index}.ppm"));
        pbm::write_raster(&path, &raster).unwrap();
        raster_paths.push(path);
    }

    let mask_dir = dir.path().join("masks");
    let placements = dir.path().join("placements.jsonl");
    run_ok(&[
        "compose",
        "--config",
        path_str(&config),
        "--raster",
        path_str(&raster_paths[0]),
        "--raster",
        path_str(&raster_paths[1]),
        "--sources",
        path_str(&sources),
        "--mask-dir",
        path_str(&mask_dir),
        "--out",
        path_str(&placements),
    ]);
    let mask = pbm::read_mask(&mask_dir.join("gen-0.pbm")).unwrap();
    assert!(mask.count_set() > 0);

    let specs = records::read_placements(&placements).unwrap();
    assert_eq!(specs.len(), 1);
    let humans = &specs[0].humans;
    assert_eq!(humans.len(), 2);
    let (occluder, occluded) = if humans[0].z_order == 1 {
        (&humans[0], &humans[1])
    } else {
        (&humans[1], &humans[0])
    };
    assert!(occluder.overlap_area(occluded) > 0);
    assert!(occluder.bottom() > occluded.bottom());
}

#[test]
fn external_adapter_round_trips_through_a_command() {
    // fake translator: echoes a generated ref and hands the target pose file
    // back as the "estimated" pose, so every step should pass the filter
    let chain = chain_setup(15, 1, "");
    let dir = chain.dir.path();
    let script = dir.join("fake-translator.sh");
    std::fs::write(
        &script,
        "#!/bin/sh\n# args: source_ref target_pose_file work_dir\nbase=$(basename \"$2\" .pose)\ncp \"$2\" \"$3/est-$base.pose\"\necho \"ext/$base\"\necho \"$3/est-$base.pose\"\n",
    )
    .unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    let config = dir.join("external.toml");
    std::fs::write(
        &config,
        format!(
            "seed = 11\n[novel_set]\nn_pos = 15\n[adapter]\nkind = \"external\"\ncommand = [\"{}\"]\n",
            script.display()
        ),
    )
    .unwrap();

    let manifest = dir.join("manifest.jsonl");
    run_ok(&[
        "plan",
        "--config",
        path_str(&config),
        "--sources",
        path_str(&chain.sources),
        "--set",
        path_str(&chain.set),
        "--out",
        path_str(&manifest),
    ]);
    let results = dir.join("results.jsonl");
    let work_dir = dir.join("work");
    run_ok(&[
        "run",
        "--config",
        path_str(&config),
        "--manifest",
        path_str(&manifest),
        "--out",
        path_str(&results),
        "--work-dir",
        path_str(&work_dir),
    ]);
    let parsed = records::read_results(&results).unwrap();
    assert!(!parsed.is_empty());
    for job in &parsed {
        assert!(matches!(job.status, posediv_core::JobStatus::Completed));
        for step in &job.steps {
            assert!(step.generated_ref.starts_with("ext/"));
            assert_eq!(step.estimated_pose.as_ref().unwrap(), &step.target_pose_2d);
        }
    }

    let filtered = dir.join("filtered.jsonl");
    run_ok(&[
        "filter",
        "--config",
        path_str(&config),
        "--results",
        path_str(&results),
        "--out",
        path_str(&filtered),
    ]);
    let (header, _) = records::read_filtered(&filtered).unwrap();
    assert_eq!(header.kept, header.generated);
}

#[test]
fn config_errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[novel_set]\nt_sim = 2.5\n").unwrap();
    let set = dir.path().join("set.poses");
    let candidates = dir.path().join("candidates.poses");
    write_candidates(&candidates, 3, 1);
    let record = run_err(&[
        "build-set",
        "--config",
        path_str(&config),
        "--from-poses",
        path_str(&candidates),
        "--out",
        path_str(&set),
    ]);
    assert_eq!(record["error"]["kind"], "config");
    assert!(
        record["error"]["message"]
            .as_str()
            .unwrap()
            .contains("t_sim"),
        "message should name the offending field: {record}"
    );

    std::fs::write(&config, "unknown_key = 1\n").unwrap();
    let record = run_err(&[
        "build-set",
        "--config",
        path_str(&config),
        "--from-poses",
        path_str(&candidates),
        "--out",
        path_str(&set),
    ]);
    assert_eq!(record["error"]["kind"], "config");
}

#[test]
fn missing_input_file_reports_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let record = run_err(&[
        "filter",
        "--results",
        path_str(&dir.path().join("nope.jsonl")),
        "--out",
        path_str(&dir.path().join("out.jsonl")),
    ]);
    assert_eq!(record["error"]["stage"], "filter");
}
