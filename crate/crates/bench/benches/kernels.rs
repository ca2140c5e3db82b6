use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hhvb_core::bundle::BundleSpec;
use hhvb_core::gamma::gamma;
use hhvb_core::kernel::{gram, k_irred, ky, sample_points, KernelExpr};
use hhvb_core::linalg::c;
use hhvb_core::mobius::factorize;
use hhvb_core::sampling::Sampler;
use hhvb_core::tuples::{build_space, op_norm_estimate};
use hhvb_core::IrrepLabel;

fn factorization(cr: &mut Criterion) {
    let mut s = Sampler::new(1);
    for n in [1, 2, 4] {
        let (g, z) = (s.group(n, 0.5), s.point(n, 0.8));
        cr.bench_with_input(BenchmarkId::new("factorize", n), &n, |b, _| b.iter(|| factorize(black_box(&g), black_box(&z))));
    }
}

fn kernels(cr: &mut Criterion) {
    for m in [0, 1, 2] {
        let label = IrrepLabel::new(2, m, -3.0).unwrap();
        cr.bench_with_input(BenchmarkId::new("k_irred", m), &label, |b, l| b.iter(|| k_irred(l)));
    }
    let chain = BundleSpec::chain(2, -3.0, &[0, 1, 2], &[c(1.0), c(0.8)]);
    cr.bench_function("gamma/ball_chain_012", |b| b.iter(|| gamma(black_box(&chain))));
    cr.bench_function("ky/ball_chain_012", |b| b.iter(|| ky(black_box(&chain))));
    let k = ky(&chain).unwrap();
    let pts = sample_points(2, 12, 3);
    cr.bench_function("gram/ball_chain_012", |b| b.iter(|| gram(&k, black_box(&pts), None)));
}

fn tuples(cr: &mut Criterion) {
    let mut group = cr.benchmark_group("tuples");
    group.sample_size(20);
    let disc = KernelExpr::h_power(1, 2.0);
    let disc_spec = BundleSpec::scalar(1, -1.0);
    for levels in [50, 200] {
        group.bench_with_input(BenchmarkId::new("disc_space", levels), &levels, |b, &l| b.iter(|| build_space(&disc_spec, &disc, l)));
    }
    let spec = BundleSpec::chain(2, -3.0, &[0, 1], &[c(1.0)]);
    let k = ky(&spec).unwrap();
    group.bench_function("ball_space/12", |b| b.iter(|| build_space(&spec, &k, 12)));
    let space = build_space(&spec, &k, 12).unwrap();
    group.bench_function("ball_norm/12", |b| b.iter(|| op_norm_estimate(black_box(&space), 0)));
    group.finish();
}

criterion_group!(benches, factorization, kernels, tuples);
criterion_main!(benches);
