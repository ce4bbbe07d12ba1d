use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edgeharden_bench::{instance, solvable, Formulation, SolverConfig};
use edgeharden_core::formulations::{build, solve_formulation};

const PAIR: [Formulation; 2] = [Formulation::Rddu, Formulation::Erddu];

fn build_models(c: &mut Criterion) {
    let mut group = c.benchmark_group("build");
    for size in [5, 10] {
        let inst = instance(size, 1);
        for f in PAIR {
            group.bench_with_input(BenchmarkId::new(f.to_string(), size), &inst, |b, inst| {
                b.iter(|| build(inst, f, None).unwrap())
            });
        }
    }
    group.finish();
}

fn solve_small(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_3x6");
    group.sample_size(10);
    let inst = solvable();
    let config = SolverConfig::exact();
    for f in PAIR {
        group.bench_function(f.to_string(), |b| {
            b.iter(|| solve_formulation(&inst, f, None, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, build_models, solve_small);
criterion_main!(benches);
