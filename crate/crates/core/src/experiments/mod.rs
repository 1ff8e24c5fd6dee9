//! Synthetic data generators and the engine benchmark harness.

mod bench;
mod signals;

pub use bench::{
    benchmark, default_estimators, denoise_sweep, records_to_csv, BenchEngine, BenchEstimator,
    BenchmarkConfig, BenchmarkRecord,
};
pub use signals::{
    add_noise, corrupt_lines, gen_bicubic, gen_bisigmoid, gen_chessboard, gen_linear, mse,
    GridSignal,
};
