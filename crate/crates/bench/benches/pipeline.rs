use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use posediv_bench::{random_mask, random_pose, random_set};
use posediv_core::camera::ProjectionConfig;
use posediv_core::diffusion::{make_schedule, sample_pose, GaussianOracleDenoiser};
use posediv_core::metric::pose_distance_3d;
use posediv_core::pipeline::morph_cleanup;
use posediv_core::search::{brute_force_search, progressive_search, SearchAnchor, SearchConfig};
use posediv_core::skeleton::{canonical_standing, world_up, Skeleton};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_pose_distance(c: &mut Criterion) {
    let skeleton = Skeleton::h36m17();
    let up = world_up();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_pose(&mut rng);
    let b = random_pose(&mut rng);
    c.bench_function("pose_distance_3d", |bencher| {
        bencher.iter(|| pose_distance_3d(black_box(&a), black_box(&b), &skeleton, &up).unwrap())
    });
}

fn bench_search(c: &mut Criterion) {
    let projection = ProjectionConfig::default();
    let mut group = c.benchmark_group("search");
    for &size in &[8usize, 12] {
        let set = random_set(2, size);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let anchor_pose = random_pose(&mut rng);
        let anchor = SearchAnchor::Ground(&anchor_pose);
        let config = SearchConfig::default();
        group.bench_with_input(
            BenchmarkId::new("progressive", size),
            &size,
            |bencher, _| {
                bencher.iter(|| progressive_search(&anchor, 0, &set, &projection, &config).unwrap())
            },
        );
        group.bench_with_input(
            BenchmarkId::new("brute_force", size),
            &size,
            |bencher, _| {
                bencher.iter(|| brute_force_search(&anchor, 0, &set, &projection, &config).unwrap())
            },
        );
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let schedule = make_schedule(100, 1e-4, 2e-2).unwrap();
    let oracle = GaussianOracleDenoiser::new(canonical_standing(), 1.0, &schedule).unwrap();
    c.bench_function("sample_pose_t100", |bencher| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        bencher.iter(|| sample_pose(&oracle, &schedule, &mut rng).unwrap())
    });
}

fn bench_morphology(c: &mut Criterion) {
    let mask = random_mask(5, 64, 64);
    c.bench_function("morph_cleanup_64x64", |bencher| {
        bencher.iter(|| morph_cleanup(black_box(&mask)))
    });
}

criterion_group!(
    benches,
    bench_pose_distance,
    bench_search,
    bench_sampling,
    bench_morphology
);
criterion_main!(benches);
