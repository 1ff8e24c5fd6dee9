//! Wall-clock benchmark harness comparing solver engines across grid sizes.
//!
//! Each run draws a noisy smooth surface and random penalty weights, solves
//! the combined fused + trend problem with every configured estimator, and
//! records timing and iteration counts. Runs are independent, so they fan
//! out across threads; the record order is still deterministic (size, then
//! seed, then estimator).

use std::time::Instant;

use crate::error::{Error, Result};
use crate::estimators::{fused_trend_filter, Engine, SolverOptions};
use crate::experiments::signals::{add_noise, gen_bisigmoid};
use crate::graph::{lattice_graph, LatticeSpec};
use crate::operators::TrendKind;
use crate::parallel;
use crate::solvers::{AdmmConfig, Backend};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Engine variants the harness distinguishes; ADMM appears once per linear
/// solver backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchEngine {
    Dual,
    AdmmCg,
    AdmmFactorization,
}

impl BenchEngine {
    pub fn name(&self) -> &'static str {
        match self {
            BenchEngine::Dual => "dual",
            BenchEngine::AdmmCg => "admm_cg",
            BenchEngine::AdmmFactorization => "admm_ldl",
        }
    }
}

/// One estimator configuration: which trend operator to pair with the fused
/// penalty, and which engine solves it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchEstimator {
    pub trend: TrendKind,
    pub engine: BenchEngine,
}

impl BenchEstimator {
    pub fn name(&self) -> &'static str {
        match self.trend {
            TrendKind::General => "fused_general_trend",
            TrendKind::Kronecker => "fused_kronecker_trend",
        }
    }
}

/// Every (trend, engine) pair, Kronecker variants first.
pub fn default_estimators() -> Vec<BenchEstimator> {
    let mut out = Vec::new();
    for trend in [TrendKind::Kronecker, TrendKind::General] {
        for engine in [
            BenchEngine::Dual,
            BenchEngine::AdmmCg,
            BenchEngine::AdmmFactorization,
        ] {
            out.push(BenchEstimator { trend, engine });
        }
    }
    out
}

/// Benchmark plan: grid sides, estimator set, and the random draws.
#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    /// Grid sides `d`; each contributes `d x d` problems.
    pub sizes: Vec<usize>,
    pub estimators: Vec<BenchEstimator>,
    /// Independent repetitions per size, each with its own seed.
    pub runs: usize,
    /// Penalty weights are drawn uniformly from this interval per run.
    pub lambda_range: (f64, f64),
    /// Noise variance for the synthetic surface.
    pub variance: f64,
    pub base_seed: u64,
    /// Absolute and relative tolerance handed to every engine.
    pub eps: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            sizes: vec![10],
            estimators: default_estimators(),
            runs: 1,
            lambda_range: (0.0, 20.0),
            variance: 0.25,
            base_seed: 42,
            eps: 1e-3,
        }
    }
}

/// One timed solve.
#[derive(Debug, Clone)]
pub struct BenchmarkRecord {
    pub estimator: &'static str,
    pub engine: &'static str,
    pub d: usize,
    pub seed: u64,
    pub lambda_f: f64,
    pub lambda_t: f64,
    pub wall_time_s: f64,
    pub iterations: usize,
}

fn validate(cfg: &BenchmarkConfig) -> Result<()> {
    if cfg.sizes.is_empty() {
        return Err(Error::InvalidParameter(
            "benchmark needs at least one size".to_string(),
        ));
    }
    for &d in &cfg.sizes {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "benchmark sizes must be at least 2, got {d}"
            )));
        }
    }
    if cfg.estimators.is_empty() {
        return Err(Error::InvalidParameter(
            "benchmark needs at least one estimator".to_string(),
        ));
    }
    if cfg.runs == 0 {
        return Err(Error::InvalidParameter(
            "benchmark needs at least one run".to_string(),
        ));
    }
    let (lo, hi) = cfg.lambda_range;
    if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "lambda range [{lo}, {hi}] is not a valid nonnegative interval"
        )));
    }
    if !cfg.variance.is_finite() || cfg.variance < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "variance must be finite and nonnegative, got {}",
            cfg.variance
        )));
    }
    if !cfg.eps.is_finite() || cfg.eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eps must be finite and positive, got {}",
            cfg.eps
        )));
    }
    Ok(())
}

fn solver_options(engine: BenchEngine, eps: f64) -> SolverOptions {
    match engine {
        BenchEngine::Dual => SolverOptions {
            engine: Engine::Dual,
            dual_tol: Some(eps),
            ..SolverOptions::default()
        },
        BenchEngine::AdmmCg | BenchEngine::AdmmFactorization => SolverOptions {
            engine: Engine::Admm,
            admm: AdmmConfig {
                eps_abs: eps,
                eps_rel: eps,
                backend: if engine == BenchEngine::AdmmCg {
                    Backend::Cg
                } else {
                    Backend::Factorization
                },
                ..AdmmConfig::default()
            },
            ..SolverOptions::default()
        },
    }
}

/// Runs the whole plan and returns one record per (size, run, estimator).
///
/// Every estimator within a run sees the same data and the same weight
/// draw, so their timings are directly comparable. Runs are distributed
/// across worker threads; see [`parallel`] for the thread cap.
pub fn benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BenchmarkRecord>> {
    validate(cfg)?;
    let tasks: Vec<(usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&d| (0..cfg.runs as u64).map(move |run| (d, run)))
        .collect();

    let outcomes = parallel::map_indexed(tasks.len(), |i| {
        let (d, run) = tasks[i];
        run_one(cfg, d, run)
    });

    let mut records = Vec::with_capacity(tasks.len() * cfg.estimators.len());
    for outcome in outcomes {
        records.extend(outcome?);
    }
    Ok(records)
}

/// All estimators on one (size, run) draw.
fn run_one(cfg: &BenchmarkConfig, d: usize, run: u64) -> Result<Vec<BenchmarkRecord>> {
    // One seed stream per (size, run) pair, well separated in the seed
    // space so different sizes never share a draw.
    let seed = cfg
        .base_seed
        .wrapping_add((d as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(run);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = cfg.lambda_range;
    let lambda_f: f64 = if lo == hi { lo } else { rng.random_range(lo..hi) };
    let lambda_t: f64 = if lo == hi { lo } else { rng.random_range(lo..hi) };

    let signal = add_noise(&gen_bisigmoid(d)?, cfg.variance, seed)?;
    let spec = LatticeSpec::new(d, d)?;
    let graph = lattice_graph(&spec);

    let mut out = Vec::with_capacity(cfg.estimators.len());
    for est in &cfg.estimators {
        let opts = solver_options(est.engine, cfg.eps);
        let started = Instant::now();
        let res = fused_trend_filter(
            &signal.values,
            &graph,
            Some(&spec),
            lambda_f,
            lambda_t,
            est.trend,
            &opts,
        )?;
        let wall_time_s = started.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        out.push(BenchmarkRecord {
            estimator: est.name(),
            engine: est.engine.name(),
            d,
            seed,
            lambda_f,
            lambda_t,
            wall_time_s,
            iterations: res.iterations,
        });
    }
    Ok(out)
}

/// Serializes records as CSV with a fixed header.
pub fn records_to_csv(records: &[BenchmarkRecord]) -> String {
    let mut s = String::from("estimator,engine,d,seed,lambda_f,lambda_t,wall_time_s,iterations\n");
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{}\n",
            r.estimator,
            r.engine,
            r.d,
            r.seed,
            r.lambda_f,
            r.lambda_t,
            r.wall_time_s,
            r.iterations
        ));
    }
    s
}

/// Filters a noisy signal at each weight (used for both penalties) and
/// reports the MSE against the stored truth, one `(lambda, mse)` pair per
/// input weight. Weights fan out across worker threads.
pub fn denoise_sweep(
    signal: &super::GridSignal,
    lambdas: &[f64],
    trend: TrendKind,
    opts: &SolverOptions,
) -> Result<Vec<(f64, f64)>> {
    let truth = signal.truth.as_ref().ok_or(Error::InvalidParameter(
        "denoise sweep needs a ground truth".to_string(),
    ))?;
    let graph = lattice_graph(&signal.spec);
    let results = parallel::map_indexed(lambdas.len(), |i| {
        let lambda = lambdas[i];
        let res = fused_trend_filter(
            &signal.values,
            &graph,
            Some(&signal.spec),
            lambda,
            lambda,
            trend,
            opts,
        )?;
        Ok::<(f64, f64), Error>((lambda, super::mse(&res.beta, truth)?))
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_size_single_run_yields_one_record_per_estimator() {
        let cfg = BenchmarkConfig::default();
        let records = benchmark(&cfg).unwrap();
        assert_eq!(records.len(), cfg.estimators.len());
        for r in &records {
            assert_eq!(r.d, 10);
            assert!(r.wall_time_s > 0.0);
            assert!(r.iterations >= 1);
            assert!((0.0..20.0).contains(&r.lambda_f));
            assert!((0.0..20.0).contains(&r.lambda_t));
        }
    }

    #[test]
    fn weights_are_shared_within_a_run_and_differ_across_runs() {
        let cfg = BenchmarkConfig {
            runs: 2,
            estimators: vec![
                BenchEstimator {
                    trend: TrendKind::Kronecker,
                    engine: BenchEngine::Dual,
                },
                BenchEstimator {
                    trend: TrendKind::Kronecker,
                    engine: BenchEngine::AdmmCg,
                },
            ],
            sizes: vec![6],
            ..BenchmarkConfig::default()
        };
        let records = benchmark(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        assert_eq!(records[0].lambda_f, records[1].lambda_f);
        assert_eq!(records[0].lambda_t, records[1].lambda_t);
        assert_ne!(records[0].lambda_f, records[2].lambda_f);
        assert_ne!(records[0].seed, records[2].seed);
    }

    #[test]
    fn record_order_is_deterministic() {
        let cfg = BenchmarkConfig {
            sizes: vec![4, 6],
            runs: 2,
            ..BenchmarkConfig::default()
        };
        let a = benchmark(&cfg).unwrap();
        let b = benchmark(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.estimator, y.estimator);
            assert_eq!(x.engine, y.engine);
            assert_eq!(x.d, y.d);
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.lambda_f, y.lambda_f);
            assert_eq!(x.iterations, y.iterations);
        }
        // Sizes appear in plan order.
        assert!(a.iter().take(cfg.estimators.len() * 2).all(|r| r.d == 4));
        assert!(a.iter().skip(cfg.estimators.len() * 2).all(|r| r.d == 6));
    }

    #[test]
    fn csv_has_the_fixed_header_and_one_line_per_record() {
        let cfg = BenchmarkConfig {
            sizes: vec![5],
            estimators: vec![BenchEstimator {
                trend: TrendKind::General,
                engine: BenchEngine::Dual,
            }],
            ..BenchmarkConfig::default()
        };
        let records = benchmark(&cfg).unwrap();
        let csv = records_to_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "estimator,engine,d,seed,lambda_f,lambda_t,wall_time_s,iterations"
        );
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), records.len());
        assert!(body[0].starts_with("fused_general_trend,dual,5,"));
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let ok = BenchmarkConfig::default();
        assert!(benchmark(&BenchmarkConfig {
            sizes: vec![],
            ..ok.clone()
        })
        .is_err());
        assert!(benchmark(&BenchmarkConfig {
            sizes: vec![1],
            ..ok.clone()
        })
        .is_err());
        assert!(benchmark(&BenchmarkConfig {
            runs: 0,
            ..ok.clone()
        })
        .is_err());
        assert!(benchmark(&BenchmarkConfig {
            lambda_range: (5.0, 1.0),
            ..ok.clone()
        })
        .is_err());
        assert!(benchmark(&BenchmarkConfig {
            eps: 0.0,
            ..ok
        })
        .is_err());
    }

    #[test]
    fn denoise_sweep_reports_one_pair_per_weight() {
        let clean = crate::experiments::gen_bisigmoid(8).unwrap();
        let noisy = crate::experiments::add_noise(&clean, 0.25, 3).unwrap();
        let pairs = denoise_sweep(
            &noisy,
            &[0.5, 2.0],
            TrendKind::Kronecker,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0, 0.5);
        for (_, m) in &pairs {
            assert!(m.is_finite() && *m >= 0.0);
        }
    }
}
