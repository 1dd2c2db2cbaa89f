use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use dispac::gaussian_net::{blobs, forward, loss_and_grad, FlatWeights, MlpArchitecture};
use dispac::mutual_info::sibson_mi;
use dispac::validity_sim::fixture;
use dispac::{kl_inverse, kl_inverse_grad};

fn binary_kl(c: &mut Criterion) {
    c.bench_function("kl_inverse", |b| b.iter(|| kl_inverse(black_box(0.1), black_box(0.05), 1e-12).unwrap()));
    c.bench_function("kl_inverse_grad", |b| b.iter(|| kl_inverse_grad(black_box(0.1), black_box(0.05)).unwrap()));
}

fn network(c: &mut Criterion) {
    let arch = MlpArchitecture::new(vec![5, 24, 2], 0.01).unwrap();
    let w = FlatWeights::init(&arch, 0);
    let data = blobs(512, 5, 2, 3.0, 0).unwrap();
    let idx: Vec<usize> = (0..32).collect();
    c.bench_function("forward", |b| b.iter(|| forward(&arch, &w, black_box(&data.features[0])).unwrap()));
    c.bench_function("loss_and_grad_batch32", |b| b.iter(|| loss_and_grad(&arch, &w, &data, black_box(&idx)).unwrap()));
}

fn enumeration(c: &mut Criterion) {
    let p = fixture("gibbs_3atom_m6").unwrap();
    c.bench_function("sibson_mi_gibbs_3atom_m6", |b| b.iter(|| sibson_mi(&p, black_box(2.0)).unwrap()));
}

criterion_group!(benches, binary_kl, network, enumeration);
criterion_main!(benches);
