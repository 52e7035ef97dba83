use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gamelab::em::{em_iterate, fit_by_splitting, EmOptions, GmmEstimate};
use gamelab::harness::{run, Algorithm};
use gamelab::loglinear::{blll_step, psblll_step, ConstrainedActionMap, LoglinearState, WakeRule};
use gamelab::stability::{build_chain, stationary_distribution, ConstantRevision};
use gamelab::JointAction;
use gamelab_bench::{coverage_config, field, table_game, two_cluster_log};

fn loglinear_steps(c: &mut Criterion) {
    let game = table_game(4, 4);
    let map = ConstrainedActionMap::complete(&[4; 4]);
    let rates = [0.3; 4];
    let mut g = c.benchmark_group("loglinear_step");
    g.bench_function("psblll", |b| {
        let mut s = LoglinearState::new(JointAction::new(vec![0; 4]), 0.1, 1).unwrap();
        b.iter(|| psblll_step(&game, &mut s, &map, WakeRule::Independent(black_box(&rates))))
    });
    g.bench_function("blll", |b| {
        let mut s = LoglinearState::new(JointAction::new(vec![0; 4]), 0.1, 1).unwrap();
        b.iter(|| blll_step(&game, &mut s, &map))
    });
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("perturbed_chain");
    g.sample_size(20);
    for n in [3usize, 4] {
        let game = table_game(n, 3);
        let map = ConstrainedActionMap::complete(&vec![3; n]);
        let rates = ConstantRevision::uniform(n, 0.4);
        g.bench_with_input(BenchmarkId::new("build", n), &n, |b, _| {
            b.iter(|| build_chain(&game, &rates, &map, black_box(1e-2), 100_000).unwrap())
        });
        let chain = build_chain(&game, &rates, &map, 1e-2, 100_000).unwrap();
        g.bench_with_input(BenchmarkId::new("stationary", n), &n, |b, _| {
            b.iter(|| stationary_distribution(&chain, 1e-12).unwrap())
        });
    }
    g.finish();
}

fn estimation(c: &mut Criterion) {
    let log = two_cluster_log(2_000);
    let opts = EmOptions::default();
    let start = fit_by_splitting(&log, 2, &EmOptions { iterations: 5, ..opts }).unwrap();
    let mut g = c.benchmark_group("em");
    g.bench_function("iterate_m2", |b| b.iter(|| em_iterate(&log, black_box(&start), &opts).unwrap()));
    g.bench_function("single", |b| b.iter(|| GmmEstimate::single(&log, &opts).unwrap()));
    g.finish();
}

fn coverage(c: &mut Criterion) {
    let mut g = c.benchmark_group("coverage_run");
    g.sample_size(10);
    for a in [Algorithm::Psblll, Algorithm::Blll, Algorithm::Soql] {
        let cfg = coverage_config(a, 40, 2_000);
        g.bench_function(a.name(), |b| b.iter(|| run(&cfg, 1).unwrap()));
    }
    g.bench_function("raster_40", |b| {
        let f = field(40);
        b.iter(|| f.raster())
    });
    g.finish();
}

criterion_group!(benches, loglinear_steps, oracle, estimation, coverage);
criterion_main!(benches);
