use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use infotrack::lidar::{generate_frame, run_trial};
use infotrack::tick::{default_tick_config, estimate_noise_variance, filter_series, generate_wick_series};
use infotrack::tomography::{bounded_reconstruction, default_params};
use infotrack::tracker::project_manifold;
use infotrack::{
    gaussian_overlap, rng, GaussianState, GeometryParams, LidarScenarioConfig, PauliExpectations, TrackerConfig,
    WickConfig,
};
use nalgebra::{DMatrix, DVector};

fn geometry(c: &mut Criterion) {
    let p = GaussianState::new(
        DVector::from_vec(vec![1.0, -0.5, 0.2]),
        DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]),
    )
    .unwrap();
    let p0 = GaussianState::isotropic(&[0.0, 0.0, 0.0], 1.5).unwrap();
    c.bench_function("gaussian_overlap_3d", |b| {
        b.iter(|| gaussian_overlap(black_box(&p), black_box(&p0), 0.3).unwrap())
    });
}

fn projection(c: &mut Criterion) {
    let config = LidarScenarioConfig::default();
    let truth = DVector::from_vec(vec![0.0, 0.0, 0.0]);
    let cloud = generate_frame(&truth, &config, &mut rng::stream(1, 1), &mut rng::stream(1, 2));
    let prior = GaussianState::isotropic(&[0.3, -0.2, 0.1], 1.5).unwrap();
    let tracker = TrackerConfig::with_defaults(GeometryParams::default(), 3);
    c.bench_function("project_manifold_55_points", |b| {
        b.iter(|| project_manifold(black_box(&prior), black_box(&cloud), &tracker).unwrap())
    });
}

fn lidar_trial(c: &mut Criterion) {
    let config = LidarScenarioConfig::default();
    let tracker = TrackerConfig::with_defaults(GeometryParams::default(), 3);
    let model = config.kinematic_model().unwrap();
    c.bench_function("lidar_trial_10_frames", |b| {
        b.iter(|| run_trial(black_box(&config), &tracker, &model).unwrap())
    });
}

fn tick(c: &mut Criterion) {
    let series = generate_wick_series(&WickConfig::default()).unwrap();
    let r = estimate_noise_variance(&series);
    let config = default_tick_config(r);
    c.bench_function("tick_filter_1000", |b| {
        b.iter(|| filter_series(black_box(&series), &config, 0.1 * r).unwrap())
    });
}

fn tomography(c: &mut Criterion) {
    let s = PauliExpectations::exact(-0.069, 0.323, 1.761);
    let params = default_params();
    c.bench_function("bounded_reconstruction", |b| {
        b.iter(|| bounded_reconstruction(black_box(&s), &params))
    });
}

criterion_group!(benches, geometry, projection, lidar_trial, tick, tomography);
criterion_main!(benches);
