//! Engine and threading benchmarks.
//!
//! Three groups:
//!
//! * `engine_single_solve` — one combined fused + trend fit per engine on a
//!   noisy smooth surface, at the default 1e-3 tolerances.
//! * `weight_sweep` — an eight-point weight sweep through the dual engine,
//!   sequential versus fanned out across the worker pool (the pool arm only
//!   exists with the `parallel` feature).
//! * `admm_warm_start` — the same ADMM weight sweep solved cold at every
//!   weight versus warm-started along the grid.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use gtf_core::estimators::{fused_trend_filter, Engine, SolverOptions};
use gtf_core::experiments::{add_noise, gen_bisigmoid, denoise_sweep, GridSignal};
use gtf_core::graph::lattice_graph;
use gtf_core::operators::{kronecker_trend_matrix, TrendKind};
use gtf_core::parallel::map_indexed_sequential;
use gtf_core::solvers::{admm_lambda_sweep, admm_solve, AdmmConfig, Backend};

const SIDE: usize = 24;

fn noisy_surface() -> GridSignal {
    let clean = gen_bisigmoid(SIDE).expect("side is large enough");
    add_noise(&clean, 0.25, 7).expect("variance is valid")
}

fn engine_single_solve(c: &mut Criterion) {
    let signal = noisy_surface();
    let graph = lattice_graph(&signal.spec);
    let mut group = c.benchmark_group("engine_single_solve");
    group.sample_size(10);

    let dual = SolverOptions {
        engine: Engine::Dual,
        dual_tol: Some(1e-3),
        ..SolverOptions::default()
    };
    group.bench_function("dual", |b| {
        b.iter(|| {
            fused_trend_filter(
                black_box(&signal.values),
                &graph,
                Some(&signal.spec),
                2.0,
                2.0,
                TrendKind::Kronecker,
                &dual,
            )
            .unwrap()
        })
    });

    for (label, backend) in [("admm_cg", Backend::Cg), ("admm_ldl", Backend::Factorization)] {
        let opts = SolverOptions {
            engine: Engine::Admm,
            admm: AdmmConfig {
                backend,
                ..AdmmConfig::default()
            },
            ..SolverOptions::default()
        };
        group.bench_function(label, |b| {
            b.iter(|| {
                fused_trend_filter(
                    black_box(&signal.values),
                    &graph,
                    Some(&signal.spec),
                    2.0,
                    2.0,
                    TrendKind::Kronecker,
                    &opts,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn weight_sweep(c: &mut Criterion) {
    let signal = noisy_surface();
    let graph = lattice_graph(&signal.spec);
    let lambdas: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
    let opts = SolverOptions {
        dual_tol: Some(1e-3),
        ..SolverOptions::default()
    };

    let mut group = c.benchmark_group("weight_sweep");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| {
            // Same work as the pool arm, pinned to the caller's thread.
            let fits = map_indexed_sequential(lambdas.len(), |i| {
                fused_trend_filter(
                    &signal.values,
                    &graph,
                    Some(&signal.spec),
                    lambdas[i],
                    lambdas[i],
                    TrendKind::Kronecker,
                    &opts,
                )
                .unwrap()
                .beta
            });
            black_box(fits)
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_function("pool", |b| {
        b.iter(|| {
            black_box(
                denoise_sweep(&signal, &lambdas, TrendKind::Kronecker, &opts).unwrap(),
            )
        })
    });
    #[cfg(not(feature = "parallel"))]
    let _ = denoise_sweep;
    group.finish();
}

fn admm_warm_start(c: &mut Criterion) {
    let signal = noisy_surface();
    let graph = lattice_graph(&signal.spec);
    let d = graph.incidence_matrix();
    let k = kronecker_trend_matrix(&signal.spec);
    let grid: Vec<(f64, f64)> = (1..=8).map(|i| (0.5 * i as f64, 0.5 * i as f64)).collect();
    let cfg = AdmmConfig::default();

    let mut group = c.benchmark_group("admm_weight_grid");
    group.sample_size(10);
    group.bench_function("cold_each", |b| {
        b.iter(|| {
            for &(lf, lt) in &grid {
                black_box(admm_solve(&signal.values, &d, &k, lf, lt, &cfg).unwrap());
            }
        })
    });
    group.bench_function("warm_sweep", |b| {
        b.iter(|| black_box(admm_lambda_sweep(&signal.values, &d, &k, &grid, &cfg).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, engine_single_solve, weight_sweep, admm_warm_start);
criterion_main!(benches);
