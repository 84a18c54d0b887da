use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lambda1_core::extremal::ExtremalConfig;
use lambda1_core::{
    assemble, build_icosphere, build_torus, hersch_balance, indefiniteness_test, solve_spectrum, EigenConfig,
    Lattice,
};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    for level in [3, 4, 5] {
        let mesh = build_icosphere(level).unwrap();
        group.bench_with_input(BenchmarkId::new("icosphere", level), &mesh, |b, m| {
            b.iter(|| assemble(black_box(m)).unwrap())
        });
    }
    let torus = build_torus(&Lattice::Clifford, 64).unwrap();
    group.bench_function("clifford_64", |b| b.iter(|| assemble(black_box(&torus)).unwrap()));
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_spectrum");
    group.sample_size(10);
    for level in [3, 4, 5] {
        let ops = assemble(&build_icosphere(level).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::new("icosphere", level), &ops, |b, ops| {
            b.iter(|| solve_spectrum(ops, None, &EigenConfig::default()).unwrap())
        });
    }
    // Both paths on the same mesh, around the switch point.
    let ops = assemble(&build_icosphere(3).unwrap()).unwrap();
    let dense = EigenConfig {
        dense_max: usize::MAX,
        ..EigenConfig::default()
    };
    group.bench_function("icosphere_3_dense", |b| b.iter(|| solve_spectrum(&ops, None, &dense).unwrap()));
    group.finish();
}

fn balancing(c: &mut Criterion) {
    let mesh = build_icosphere(4).unwrap();
    let mu: Vec<f64> = mesh
        .unit_sphere_points()
        .iter()
        .map(|x| (2.0 * x[2] + 0.5 * x[0]).exp())
        .collect();
    c.bench_function("hersch_balance/icosphere_4", |b| {
        b.iter(|| hersch_balance(black_box(&mesh), &mu, 1e-12).unwrap())
    });
}

fn extremality(c: &mut Criterion) {
    let mesh = build_icosphere(4).unwrap();
    let ops = assemble(&mesh).unwrap();
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    let cfg = ExtremalConfig::default();
    let mut group = c.benchmark_group("indefiniteness_test");
    group.sample_size(10);
    group.bench_function("icosphere_4", |b| {
        b.iter(|| indefiniteness_test(&mesh, &ops, &spec, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, assembly, spectrum, balancing, extremality);
criterion_main!(benches);
