use afford_core::data::{make_synthetic, standardize, SyntheticSpec};
use afford_core::optimizer::{class_weights, target_neighbors, train, Objective, TrainConfig};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn synthetic(n: usize, dims: usize) -> afford_core::Dataset {
    let (ds, _) = make_synthetic(&SyntheticSpec {
        n_per_class: [n / 2, n - n / 2],
        dims,
        informative_dims: vec![0, 1, 2],
        class_separation: 4.0,
        noise_std: 1.0,
        seed: 1,
    })
    .unwrap();
    standardize(&ds).unwrap().0
}

fn objective(c: &mut Criterion) {
    let ds = synthetic(140, 50);
    let labels = ds.binary_labels(0);
    let cfg = TrainConfig { lambda: 0.1, ..Default::default() };
    let weights = class_weights(&labels).unwrap();
    let triples = target_neighbors(ds.features.view(), &labels, cfg.k).unwrap();
    let obj = Objective::new(ds.features.view(), &labels, &triples, &weights, &cfg).unwrap();
    let l = ndarray::Array2::from_shape_fn((3, 50), |(i, j)| ((i * 7 + j) % 5) as f64 * 0.1);

    c.bench_function("loss_n140_d50", |b| b.iter(|| obj.loss(black_box(&l)).unwrap()));
    c.bench_function("gradient_n140_d50", |b| b.iter(|| obj.gradient(black_box(&l)).unwrap()));
}

fn training(c: &mut Criterion) {
    let ds = synthetic(140, 50);
    let cfg = TrainConfig { lambda: 1.0, ..Default::default() };
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("n140_d50", |b| b.iter(|| train(black_box(&ds), 0, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, objective, training);
criterion_main!(benches);
