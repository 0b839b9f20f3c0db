//! Stage timings for the data-parallel paths, run once on the default
//! thread pool ("par") and once pinned to a single thread ("seq"). On a
//! multi-core host the gap shows what the work-stealing layer buys; the
//! numbers converge on a single-core host.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use vigil::config::RunConfig;
use vigil::detector::train_detector;
use vigil::eval::{pixel_level_eval, GroundTruth};
use vigil::synth::{generate, Plant, SynthDataset, SynthSpec};
use vigil::volume::{connected_components_3d, IndicatorTensor};

fn small_config() -> RunConfig {
    RunConfig {
        scales: vec![1.0, 0.5],
        patch_h: 6,
        patch_w: 6,
        resize_h: 48,
        resize_w: 72,
        cluster_hidden: 2,
        detect_hidden: 16,
        epochs: 2,
        batch_size: 32,
        gamma: 3,
        chunk_len: 10,
        seed: 5,
        ..RunConfig::default()
    }
}

fn scene(n_frames: usize, plants: Vec<Plant>) -> SynthDataset {
    let cfg = small_config();
    let spec = SynthSpec {
        n_frames,
        height: cfg.resize_h,
        width: cfg.resize_w,
        cell: 12,
        noise_sigma: 0.02,
        drift_per_frame: 0.0,
        plants,
    };
    generate(&spec, 5).expect("valid scene")
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("par", rayon::ThreadPoolBuilder::new().build().unwrap()),
        (
            "seq",
            rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap(),
        ),
    ]
}

/// Region models train independently; this is the widest parallel section.
fn bench_train_regions(c: &mut Criterion) {
    let cfg = small_config();
    let data = scene(30, Vec::new());
    let mut group = c.benchmark_group("train_regions");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| train_detector(&data.frames, &cfg).unwrap()));
        });
    }
    group.finish();
}

/// Frames score independently once the model is fixed.
fn bench_score_frames(c: &mut Criterion) {
    let cfg = small_config();
    let data = scene(40, Vec::new());
    let model = train_detector(&data.frames[..30], &cfg).unwrap();
    let mut group = c.benchmark_group("score_frames");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| model.score_frames(&data.frames).unwrap()));
        });
    }
    group.finish();
}

/// The ROC sweep filters the score volume once per threshold.
fn bench_threshold_sweep(c: &mut Criterion) {
    let cfg = small_config();
    let train = scene(30, Vec::new());
    let test = scene(
        40,
        vec![Plant {
            t0: 10,
            t1: 29,
            row: 10,
            col: 20,
            h: 12,
            w: 12,
            intensity: 0.05,
        }],
    );
    let model = train_detector(&train.frames, &cfg).unwrap();
    let maps = model.score_frames(&test.frames).unwrap();
    let gt = GroundTruth {
        frame_labels: test.labels.clone(),
        masks: Some(test.masks.clone()),
    };
    let mut group = c.benchmark_group("threshold_sweep");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| {
                    pixel_level_eval(&maps, &gt, cfg.gamma, cfg.chunk_len, None).unwrap()
                })
            });
        });
    }
    group.finish();
}

/// Component labelling is sequential by design; tracked here as a floor.
fn bench_connected_components(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut bits = ndarray::Array3::<u8>::zeros((20, 48, 72));
    for b in bits.iter_mut() {
        if rng.random::<f64>() < 0.1 {
            *b = 1;
        }
    }
    let indicator = IndicatorTensor { bits };
    c.bench_function("connected_components", |b| {
        b.iter(|| connected_components_3d(&indicator));
    });
}

criterion_group!(
    benches,
    bench_train_regions,
    bench_score_frames,
    bench_threshold_sweep,
    bench_connected_components
);
criterion_main!(benches);
