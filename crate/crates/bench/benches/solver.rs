use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sessionize::similarity::labeling_to_similarity;
use sessionize::solver::{brute_force, greedy_incumbent, solve, SolverProblem};
use sessionize_bench::{clustered, random_weighted};

fn cluster_instances(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve/clustered");
    for (topics, per_topic) in [(2, 4), (3, 8), (5, 8)] {
        let (inst, labels) = clustered(topics, per_topic, 15, 60);
        let sim = labeling_to_similarity(&labels, &inst).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(inst.paper_count()), &(), |b, _| {
            b.iter(|| solve(black_box(&SolverProblem::new(&inst, &sim).unwrap())).unwrap())
        });
    }
    group.finish();
}

fn weighted_instances(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve/weighted");
    group.sample_size(20);
    for n in [8, 12] {
        let (inst, sim) = random_weighted(7, n, 3);
        group.bench_with_input(BenchmarkId::new("branch_and_bound", n), &(), |b, _| {
            b.iter(|| solve(black_box(&SolverProblem::new(&inst, &sim).unwrap())).unwrap())
        });
    }
    let (inst, sim) = random_weighted(7, 8, 3);
    group.bench_function("brute_force/8", |b| {
        b.iter(|| brute_force(black_box(&SolverProblem::new(&inst, &sim).unwrap())).unwrap())
    });
    group.finish();
}

fn budgeted(c: &mut Criterion) {
    let (inst, sim) = random_weighted(11, 60, 8);
    let mut group = c.benchmark_group("solve/budgeted");
    group.sample_size(10);
    group.bench_function("greedy/60", |b| {
        b.iter(|| greedy_incumbent(black_box(&SolverProblem::new(&inst, &sim).unwrap())))
    });
    group.bench_function("timeout_20ms/60", |b| {
        b.iter(|| {
            let problem = SolverProblem::new(&inst, &sim)
                .unwrap()
                .with_time_budget(Duration::from_millis(20));
            solve(black_box(&problem)).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, cluster_instances, weighted_instances, budgeted);
criterion_main!(benches);
