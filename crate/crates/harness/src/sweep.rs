//! Hyper-parameter sweeps.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method, Params, SweepGrid};
use crate::error::{Error, Result};
use crate::experiment::{build_dataset, run_method};
use crate::output::{write_file, write_manifest};

/// Grid used when a sweep is requested without a `[sweep]` table.
pub fn default_grid(method: Method) -> SweepGrid {
    SweepGrid {
        method,
        tau: vec![25, 50, 100],
        eta: vec![0.2, 0.4, 0.6, 0.8, 1.0],
        c: vec![0.25, 0.5, 1.0, 2.0],
        d: vec![1, 2],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: Params,
    pub seed: u64,
    pub method: Method,
    /// Time-averaged state RMSE.
    pub rmse: f64,
    /// Mean operator error over updates on the method's support.
    pub srmse: Option<f64>,
}

/// One row per grid point and seed, in grid order then seed order. Each
/// seed's dataset is generated once and shared by all grid points.
pub fn run_sweep(cfg: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::validation("sweep", "parameter grid is empty"));
    }
    let points = grid.points(cfg.params);
    for p in &points {
        p.validate()?;
    }
    let per_seed: Vec<Vec<SweepRow>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let data = build_dataset(cfg, seed)?;
            points
                .iter()
                .map(|p| {
                    let r = run_method(cfg, &data, grid.method, p)?;
                    Ok(SweepRow {
                        params: *p,
                        seed,
                        method: grid.method,
                        rmse: r.mean_rmse(),
                        srmse: r.mean_support_error(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(points.len() * cfg.seeds.len());
    for k in 0..points.len() {
        rows.extend(per_seed.iter().map(|s| s[k].clone()));
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("tau,eta,c,d,seed,method,rmse,srmse\n");
    for r in rows {
        let srmse = r.srmse.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{srmse}",
            r.params.tau, r.params.eta, r.params.c, r.params.d, r.seed, r.method, r.rmse
        );
    }
    s
}

pub fn write_sweep(out: &Path, cfg: &ExperimentConfig, rows: &[SweepRow]) -> Result<()> {
    let path = out.join("sweep.csv");
    write_file(&path, sweep_csv(rows))?;
    write_manifest(out, "sweep", cfg, &[path])
}
