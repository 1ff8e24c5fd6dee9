//! `gtf`: fused trend filtering on graphs from the command line.
//!
//! Three subcommands:
//!
//! * `filter` — denoise a signal (CSV or PGM) over a graph with any mix of
//!   fused, nearly-isotonic, and trend penalties.
//! * `bench` — time the solver engines across grid sizes and write a CSV.
//! * `demo` — regenerate the chessboard denoising/inpainting pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or parse error,
//! 3 when the solver stopped at its iteration cap (output is still
//! written). The `GTF_THREADS` environment variable caps the worker pool.

mod pgm;
mod signal_io;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gtf_core::estimators::{
    fused_trend_filter, mixed_trend_filter, nearly_isotonic_trend_filter, Engine, SolverOptions,
};
use gtf_core::experiments::{
    add_noise, benchmark, corrupt_lines, gen_chessboard, mse, records_to_csv, BenchmarkConfig,
    GridSignal,
};
use gtf_core::graph::{chain_graph, lattice_graph, DiGraph, LatticeSpec};
use gtf_core::operators::{PenaltyKind, PenaltySpec, TrendKind};
use gtf_core::parallel;
use gtf_core::solvers::{trace_to_csv, AdmmConfig, SolveResult};

use signal_io::{read_signal, write_signal, SignalFormat};

#[derive(Parser)]
#[command(
    name = "gtf",
    version,
    about = "Fused trend filtering on directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a signal with fused, nearly-isotonic, and trend penalties
    Filter(FilterArgs),
    /// Time the solver engines across grid sizes and write a CSV
    Bench(BenchArgs),
    /// Run the chessboard denoising and inpainting showcase
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrendArg {
    /// Penalize the graph Laplacian image `||L beta||_1`
    General,
    /// Penalize per-axis second differences on a lattice
    Kronecker,
}

impl From<TrendArg> for TrendKind {
    fn from(t: TrendArg) -> TrendKind {
        match t {
            TrendArg::General => TrendKind::General,
            TrendArg::Kronecker => TrendKind::Kronecker,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    /// Operator splitting with an inner linear solver
    Admm,
    /// Projected gradient on the box-constrained dual
    Dual,
}

#[derive(Args)]
struct FilterArgs {
    /// Input signal: CSV (one value per line, column-major on lattices) or
    /// a PGM image (P2/P5)
    #[arg(long)]
    input: PathBuf,
    /// Output path, written in the input's format
    #[arg(long)]
    output: PathBuf,
    /// Graph source: `chain:N`, `lattice:N1xN2`, or an edge-list file
    /// (defaults to the image lattice for PGM inputs)
    #[arg(long)]
    graph: Option<String>,
    /// Lattice shape `N1xN2` (rows x columns); implies the grid graph when
    /// `--graph` is absent
    #[arg(long)]
    lattice: Option<String>,
    /// Fused-lasso weight on edge differences
    #[arg(long, visible_alias = "fused", default_value_t = 0.0)]
    lambda_f: f64,
    /// Nearly-isotonic weight on order violations (graph must be acyclic)
    #[arg(long, default_value_t = 0.0)]
    lambda_ni: f64,
    /// Trend-filtering weight on curvature
    #[arg(long, default_value_t = 0.0)]
    lambda_t: f64,
    /// Which trend operator `--lambda-t` penalizes
    #[arg(long, value_enum, default_value_t = TrendArg::General)]
    trend: TrendArg,
    #[arg(long, value_enum, default_value_t = EngineArg::Dual)]
    engine: EngineArg,
    /// Absolute stopping tolerance (the dual engine's KKT tolerance)
    #[arg(long, default_value_t = 1e-3)]
    eps_abs: f64,
    /// Relative stopping tolerance (ADMM engine)
    #[arg(long, default_value_t = 1e-3)]
    eps_rel: f64,
    /// ADMM step weight for the fused block
    #[arg(long, default_value_t = 1.0)]
    rho1: f64,
    /// ADMM step weight for the trend block
    #[arg(long, default_value_t = 1.0)]
    rho2: f64,
    /// Iteration cap; hitting it exits 3 after writing the output
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Write per-iteration diagnostics (iter,r_pri,r_dual,objective) as CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid sides to benchmark, comma-separated (each gives a d x d problem)
    #[arg(long, default_value = "10,20")]
    sizes: String,
    /// Independent runs per size
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Base seed for data and weight draws
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Lower end of the uniform penalty-weight draw
    #[arg(long, default_value_t = 0.0)]
    lambda_min: f64,
    /// Upper end of the uniform penalty-weight draw
    #[arg(long, default_value_t = 20.0)]
    lambda_max: f64,
    /// Stopping tolerance handed to every engine
    #[arg(long, default_value_t = 1e-3)]
    eps_abs: f64,
    /// Where to write the records CSV
    #[arg(long, default_value = "bench.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    /// Directory for the images and the MSE table
    #[arg(long, default_value = "gtf-demo")]
    output_dir: PathBuf,
    /// Chessboard side length
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Squares per side (must divide the size)
    #[arg(long, default_value_t = 8)]
    squares: usize,
    /// Gaussian noise variance
    #[arg(long, default_value_t = 0.25)]
    variance: f64,
    /// Noise seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Value painted over the corrupted rows and columns
    #[arg(long, default_value_t = 0.5)]
    fill: f64,
    /// Candidate penalty weights, comma-separated; each variant reports its
    /// best weight by MSE against the clean board
    #[arg(long, default_value = "0.5,1,2")]
    lambdas: String,
}

/// Failures sorted by exit code: usage problems (1) and data problems (2).
enum CliError {
    Usage(String),
    Data(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successes; everything else clap catches
            // is a usage error.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Filter(args) => cmd_filter(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Demo(args) => cmd_demo(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Graph plus optional grid geometry resolved from the flags.
struct Geometry {
    graph: DiGraph,
    lattice: Option<LatticeSpec>,
}

fn parse_lattice_shape(text: &str) -> Result<LatticeSpec, CliError> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("lattice shape {text:?} is not of the form N1xN2")))?;
    let n1: usize = a
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad lattice rows in {text:?}")))?;
    let n2: usize = b
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad lattice columns in {text:?}")))?;
    LatticeSpec::new(n1, n2).map_err(|e| usage(e.to_string()))
}

fn resolve_geometry(
    graph_flag: Option<&str>,
    lattice_flag: Option<&str>,
    image_dims: Option<(usize, usize)>,
) -> Result<Geometry, CliError> {
    let mut lattice = lattice_flag.map(parse_lattice_shape).transpose()?;
    if lattice.is_none() {
        if let Some((rows, cols)) = image_dims {
            lattice = Some(LatticeSpec::new(rows, cols).map_err(|e| data(e.to_string()))?);
        }
    }
    let graph = match graph_flag {
        Some(src) => {
            if let Some(n) = src.strip_prefix("chain:") {
                let n: usize = n
                    .parse()
                    .map_err(|_| usage(format!("bad chain length in {src:?}")))?;
                chain_graph(n).map_err(|e| usage(e.to_string()))?
            } else if let Some(shape) = src.strip_prefix("lattice:") {
                let spec = parse_lattice_shape(shape)?;
                match lattice {
                    Some(existing) if existing != spec => {
                        return Err(usage(format!(
                            "--graph names a {}x{} lattice but --lattice says {}x{}",
                            spec.n1, spec.n2, existing.n1, existing.n2
                        )))
                    }
                    _ => lattice = Some(spec),
                }
                lattice_graph(&spec)
            } else {
                let text = std::fs::read_to_string(src)
                    .map_err(|e| data(format!("cannot read graph {src}: {e}")))?;
                DiGraph::from_edge_list(&text).map_err(|e| data(e.to_string()))?
            }
        }
        None => match lattice {
            Some(spec) => lattice_graph(&spec),
            None => {
                return Err(usage(
                    "no graph given: pass --graph or --lattice (PGM inputs imply their own lattice)",
                ))
            }
        },
    };
    if let Some(spec) = lattice {
        if spec.n() != graph.n_vertices() {
            return Err(usage(format!(
                "lattice has {} vertices but the graph has {}",
                spec.n(),
                graph.n_vertices()
            )));
        }
    }
    Ok(Geometry { graph, lattice })
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if !v.is_finite() || v <= 0.0 {
        return Err(usage(format!("{name} must be finite and positive, got {v}")));
    }
    Ok(())
}

fn check_weight(name: &str, v: f64) -> Result<(), CliError> {
    if !v.is_finite() || v < 0.0 {
        return Err(usage(format!(
            "{name} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

fn cmd_filter(args: &FilterArgs) -> Result<u8, CliError> {
    check_weight("--lambda-f", args.lambda_f)?;
    check_weight("--lambda-ni", args.lambda_ni)?;
    check_weight("--lambda-t", args.lambda_t)?;
    check_positive("--eps-abs", args.eps_abs)?;
    check_positive("--eps-rel", args.eps_rel)?;
    check_positive("--rho1", args.rho1)?;
    check_positive("--rho2", args.rho2)?;
    if args.max_iter == 0 {
        return Err(usage("--max-iter must be at least 1"));
    }

    let (y, format) = read_signal(&args.input).map_err(CliError::Data)?;
    let geo = resolve_geometry(
        args.graph.as_deref(),
        args.lattice.as_deref(),
        format.image_dims(),
    )?;
    if y.len() != geo.graph.n_vertices() {
        return Err(data(format!(
            "signal has {} values but the graph has {} vertices",
            y.len(),
            geo.graph.n_vertices()
        )));
    }

    if args.lambda_ni > 0.0 && args.lambda_f > 0.0 && args.engine == EngineArg::Admm {
        return Err(usage(
            "--lambda-f and --lambda-ni together need --engine dual",
        ));
    }
    // The trend choice only matters when its weight is active.
    let trend = if args.lambda_t > 0.0 {
        TrendKind::from(args.trend)
    } else {
        TrendKind::General
    };
    if trend == TrendKind::Kronecker {
        let spec = geo
            .lattice
            .ok_or_else(|| usage("--trend kronecker needs lattice geometry (--lattice or a PGM input)"))?;
        if spec.n1 < 3 && spec.n2 < 3 {
            eprintln!(
                "warning: a {}x{} lattice has no second differences; the trend penalty is inactive",
                spec.n1, spec.n2
            );
        }
    }

    let opts = SolverOptions {
        engine: match args.engine {
            EngineArg::Admm => Engine::Admm,
            EngineArg::Dual => Engine::Dual,
        },
        admm: AdmmConfig {
            rho1: args.rho1,
            rho2: args.rho2,
            eps_abs: args.eps_abs,
            eps_rel: args.eps_rel,
            max_iter: args.max_iter,
            ..AdmmConfig::default()
        },
        dual_tol: Some(args.eps_abs),
        dual_max_iter: args.max_iter,
        collect_trace: args.trace.is_some(),
        ..SolverOptions::default()
    };

    let result = run_filter(&y, &geo, args, trend, &opts).map_err(|e| data(e.to_string()))?;

    write_signal(&args.output, &result.beta, &format).map_err(CliError::Data)?;
    if let Some(trace_path) = &args.trace {
        std::fs::write(trace_path, trace_to_csv(&result.trace))
            .map_err(|e| data(format!("cannot write {}: {e}", trace_path.display())))?;
    }
    println!(
        "n={} m={} iters={} objective={:.12e}",
        geo.graph.n_vertices(),
        geo.graph.n_edges(),
        result.iterations,
        result.objective
    );
    if result.converged {
        Ok(0)
    } else {
        eprintln!(
            "warning: stopped at the iteration cap with residuals {:.3e} / {:.3e}",
            result.primal_residual, result.dual_residual
        );
        Ok(3)
    }
}

fn run_filter(
    y: &[f64],
    geo: &Geometry,
    args: &FilterArgs,
    trend: TrendKind,
    opts: &SolverOptions,
) -> gtf_core::Result<SolveResult> {
    let lattice = geo.lattice.as_ref();
    if args.lambda_ni == 0.0 {
        return fused_trend_filter(
            y,
            &geo.graph,
            lattice,
            args.lambda_f,
            args.lambda_t,
            trend,
            opts,
        );
    }
    if args.lambda_f == 0.0 {
        return nearly_isotonic_trend_filter(
            y,
            &geo.graph,
            lattice,
            args.lambda_ni,
            args.lambda_t,
            trend,
            opts,
        );
    }
    // All three penalty families at once: a three-block problem for the
    // dual engine (cmd_filter already rejected --engine admm here).
    if !geo.graph.is_dag() {
        return Err(gtf_core::Error::CyclicGraph);
    }
    let d = geo.graph.incidence_matrix();
    let mut penalties = vec![
        PenaltySpec::new(d.clone(), PenaltyKind::L1, args.lambda_f)?,
        PenaltySpec::new(d, PenaltyKind::PositivePart, args.lambda_ni)?,
    ];
    if args.lambda_t > 0.0 {
        let t = gtf_core::operators::trend_operator(&geo.graph, lattice, trend)?;
        penalties.push(PenaltySpec::new(t, PenaltyKind::L1, args.lambda_t)?);
    }
    mixed_trend_filter(y, &penalties, opts)
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, CliError> {
    let sizes = parse_usize_list(&args.sizes).map_err(|e| usage(format!("--sizes: {e}")))?;
    check_positive("--eps-abs", args.eps_abs)?;
    let cfg = BenchmarkConfig {
        sizes,
        runs: args.seeds,
        lambda_range: (args.lambda_min, args.lambda_max),
        base_seed: args.seed,
        eps: args.eps_abs,
        ..BenchmarkConfig::default()
    };
    let records = benchmark(&cfg).map_err(|e| usage(e.to_string()))?;
    std::fs::write(&args.output, records_to_csv(&records))
        .map_err(|e| data(format!("cannot write {}: {e}", args.output.display())))?;
    println!("wrote {} records to {}", records.len(), args.output.display());
    Ok(0)
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| format!("cannot parse {part:?} as an integer"))
        })
        .collect()
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|part| {
            let v: f64 = part
                .trim()
                .parse()
                .map_err(|_| format!("cannot parse {part:?} as a number"))?;
            if !v.is_finite() || v < 0.0 {
                return Err(format!("weight {v} must be finite and nonnegative"));
            }
            Ok(v)
        })
        .collect()
}

/// One demo arm: a named estimator configuration over the weight grid.
struct DemoVariant {
    name: &'static str,
    /// Weight applied to the fused penalty per grid value (0 or 1).
    fused_scale: f64,
    /// Weight applied to the trend penalty per grid value (0 or 1).
    trend_scale: f64,
    trend: TrendKind,
}

const DEMO_VARIANTS: [DemoVariant; 5] = [
    DemoVariant {
        name: "fused",
        fused_scale: 1.0,
        trend_scale: 0.0,
        trend: TrendKind::General,
    },
    DemoVariant {
        name: "trend_general",
        fused_scale: 0.0,
        trend_scale: 1.0,
        trend: TrendKind::General,
    },
    DemoVariant {
        name: "trend_kronecker",
        fused_scale: 0.0,
        trend_scale: 1.0,
        trend: TrendKind::Kronecker,
    },
    DemoVariant {
        name: "fused_general",
        fused_scale: 1.0,
        trend_scale: 1.0,
        trend: TrendKind::General,
    },
    DemoVariant {
        name: "fused_kronecker",
        fused_scale: 1.0,
        trend_scale: 1.0,
        trend: TrendKind::Kronecker,
    },
];

fn cmd_demo(args: &DemoArgs) -> Result<u8, CliError> {
    check_weight("--variance", args.variance)?;
    if !args.fill.is_finite() {
        return Err(usage(format!("--fill must be finite, got {}", args.fill)));
    }
    let lambdas = parse_f64_list(&args.lambdas).map_err(|e| usage(format!("--lambdas: {e}")))?;
    if lambdas.is_empty() {
        return Err(usage("--lambdas needs at least one weight"));
    }

    let board = gen_chessboard(args.size, args.squares).map_err(|e| usage(e.to_string()))?;
    let noisy = add_noise(&board, args.variance, args.seed).map_err(|e| usage(e.to_string()))?;
    // Two rows and two columns wiped, spread over the board.
    let d = args.size;
    let corrupted = corrupt_lines(&noisy, &[d / 4, 3 * d / 4], &[d / 3, 2 * d / 3], args.fill)
        .map_err(|e| usage(e.to_string()))?;
    let truth = board.values.clone();

    std::fs::create_dir_all(&args.output_dir)
        .map_err(|e| data(format!("cannot create {}: {e}", args.output_dir.display())))?;
    write_demo_image(&args.output_dir, "original", &board)?;
    write_demo_image(&args.output_dir, "corrupted", &corrupted)?;

    // Every (variant, weight) pair is independent; fan them out and keep
    // the best weight per variant by MSE against the clean board.
    let graph = lattice_graph(&corrupted.spec);
    let opts = SolverOptions {
        dual_tol: Some(1e-4),
        ..SolverOptions::default()
    };
    let fits = parallel::map_indexed(DEMO_VARIANTS.len() * lambdas.len(), |idx| {
        let variant = &DEMO_VARIANTS[idx / lambdas.len()];
        let lambda = lambdas[idx % lambdas.len()];
        let res = fused_trend_filter(
            &corrupted.values,
            &graph,
            Some(&corrupted.spec),
            variant.fused_scale * lambda,
            variant.trend_scale * lambda,
            variant.trend,
            &opts,
        )?;
        let err = mse(&res.beta, &truth)?;
        Ok::<(f64, f64, Vec<f64>), gtf_core::Error>((lambda, err, res.beta))
    });

    let mut table = String::from("image,lambda_f,lambda_t,mse\n");
    let mut report = String::new();
    let noisy_mse = mse(&noisy.values, &truth).map_err(|e| data(e.to_string()))?;
    let corrupted_mse = mse(&corrupted.values, &truth).map_err(|e| data(e.to_string()))?;
    let _ = writeln!(table, "original,0,0,{:.16e}", 0.0);
    let _ = writeln!(table, "noisy,0,0,{noisy_mse:.16e}");
    let _ = writeln!(table, "corrupted,0,0,{corrupted_mse:.16e}");
    let _ = writeln!(report, "{:<18} {:>9} {:>9} {:>12}", "image", "lambda_f", "lambda_t", "mse");
    let _ = writeln!(report, "{:<18} {:>9} {:>9} {:>12.6}", "noisy", "-", "-", noisy_mse);
    let _ = writeln!(report, "{:<18} {:>9} {:>9} {:>12.6}", "corrupted", "-", "-", corrupted_mse);

    let mut fit_iter = fits.into_iter();
    for variant in &DEMO_VARIANTS {
        let mut best: Option<(f64, f64, Vec<f64>)> = None;
        for _ in 0..lambdas.len() {
            let candidate = fit_iter
                .next()
                .expect("one fit per (variant, weight) pair")
                .map_err(|e| data(e.to_string()))?;
            if best.as_ref().is_none_or(|(_, m, _)| candidate.1 < *m) {
                best = Some(candidate);
            }
        }
        let (lambda, err, beta) = best.expect("at least one weight");
        let filtered = GridSignal {
            spec: corrupted.spec,
            values: beta,
            truth: corrupted.truth.clone(),
        };
        write_demo_image(&args.output_dir, variant.name, &filtered)?;
        let lf = variant.fused_scale * lambda;
        let lt = variant.trend_scale * lambda;
        let _ = writeln!(table, "{},{lf},{lt},{err:.16e}", variant.name);
        let _ = writeln!(
            report,
            "{:<18} {:>9} {:>9} {:>12.6}",
            variant.name, lf, lt, err
        );
    }

    let table_path = args.output_dir.join("mse.csv");
    std::fs::write(&table_path, table)
        .map_err(|e| data(format!("cannot write {}: {e}", table_path.display())))?;
    print!("{report}");
    println!("images and mse.csv written to {}", args.output_dir.display());
    Ok(0)
}

fn write_demo_image(dir: &Path, name: &str, signal: &GridSignal) -> Result<(), CliError> {
    let meta = pgm::PgmMeta {
        binary: true,
        width: signal.spec.n2,
        height: signal.spec.n1,
        maxval: 255,
    };
    let path = dir.join(format!("{name}.pgm"));
    write_signal(&path, &signal.values, &SignalFormat::Pgm(meta)).map_err(CliError::Data)
}
