//! Experiment runner for the estimators in `lock-core`: configuration,
//! per-seed runs, sweeps, cost measurements and result files.

pub mod bench;
pub mod config;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod output;
pub mod svg;
pub mod sweep;

pub use bench::{run_bench, CostReport};
pub use config::{ExperimentConfig, ExperimentKind, Method, Params, Prediction, SweepGrid};
pub use error::{Error, Result};
pub use experiment::{build_dataset, run_method, run_seed, run_seeds, Dataset, MethodResult, SeedResult};
pub use output::Format;
pub use sweep::{run_sweep, SweepRow};

use std::path::Path;

/// Runs every seed of `cfg` and writes the result files under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, format: Format) -> Result<Vec<SeedResult>> {
    let results = run_seeds(cfg)?;
    output::write_experiment(out, cfg, &results, format)?;
    Ok(results)
}
