use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairkm::{
    assign_clients, brute_force_opt, build_hst, build_split_tree, min_weight_perfect_matching,
    solve_log_k, solve_qptas, LogKOptions, OracleBudget, QptasOptions,
};
use fairkm_bench::{dense_graph, plane};

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    for n in [6, 8] {
        let inst = plane(n, 2, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| brute_force_opt(black_box(inst), None, OracleBudget::default()).unwrap())
        });
    }
    g.finish();
}

fn trees(c: &mut Criterion) {
    let inst = plane(40, 3, 2);
    let points = inst.used_points();
    c.bench_function("build_hst/60", |b| {
        b.iter(|| build_hst(&inst.metric, black_box(&points), 7).unwrap())
    });
    c.bench_function("build_split_tree/60", |b| {
        b.iter(|| build_split_tree(&inst.metric, black_box(&points), 0.25, 7).unwrap())
    });
}

fn log_k(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_log_k");
    g.sample_size(20);
    for n in [8, 16] {
        let inst = plane(n, 2, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| {
                solve_log_k(
                    black_box(inst),
                    LogKOptions {
                        trees: 3,
                        ..LogKOptions::default()
                    },
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

fn qptas(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_qptas");
    g.sample_size(10);
    for n in [6, 8] {
        let inst = plane(n, 2, 4);
        let opts = QptasOptions {
            rho: Some(0.5),
            ..QptasOptions::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| solve_qptas(black_box(inst), opts).unwrap())
        });
    }
    g.finish();
}

fn matching(c: &mut Criterion) {
    let mut g = c.benchmark_group("matching");
    for m in [8, 32, 128] {
        let graph = dense_graph(m);
        g.bench_with_input(BenchmarkId::from_parameter(m), &graph, |b, graph| {
            b.iter(|| min_weight_perfect_matching(black_box(graph)).unwrap())
        });
    }
    g.finish();
}

fn flow(c: &mut Criterion) {
    let inst = plane(60, 2, 5);
    let hist = inst.color_histogram();
    let open = vec![0, 1];
    let lambda: BTreeMap<_, _> = [
        (0, hist.iter().map(|h| h / 2).collect::<Vec<_>>()),
        (1, hist.iter().map(|h| h - h / 2).collect()),
    ]
    .into();
    c.bench_function("assign_clients/60", |b| {
        b.iter(|| assign_clients(black_box(&inst), &open, &lambda).unwrap())
    });
}

criterion_group!(benches, oracle, trees, log_k, qptas, matching, flow);
criterion_main!(benches);
