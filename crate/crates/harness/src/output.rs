//! CSV, SVG and manifest writers.
//!
//! Per-seed files live in `seed-<n>/` under the output directory:
//!
//! | file              | columns                                   |
//! |-------------------|-------------------------------------------|
//! | `state_rmse.csv`  | `t,label,value`                           |
//! | `states.csv`      | `t,label,component,value` (vector data)   |
//! | `operators.csv`   | `t,method,row,col,value` (snapshots)      |
//! | `errors.csv`      | `t,method,overall,true_zero`              |
//! | `loglik.csv`      | `t,method,iteration,value` (EMKF)         |
//! | `prediction.csv`  | `t,label,value`                           |
//!
//! In `operators.csv` and `errors.csv`, `t = -1` marks the initial operator.
//! The top level holds `summary.csv` (`seed,method,metric,value`),
//! `aggregate.csv` (`method,metric,n,mean,q05,median,q95`),
//! `error_quantiles.csv` (`t,method,n,q05,median,q95`) and `manifest.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lock_core::metrics::{write_series_csv, MetricSeries};
use lock_core::{Operator, Vector};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{MethodResult, SeedResult};
use crate::svg::line_plot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    /// CSV files plus SVG line plots.
    Svg,
}

/// Settings marked as harness choices rather than published values.
pub const ASSUMED_DEFAULTS: [&str; 5] = [
    "object-moving direction schedule: changes every 10 steps through eight compass directions",
    "global-flow schedule: right, up, left, down every 50 steps; T = 250",
    "local-stationary block directions: up, right, down, left for UL, UR, LR, LL",
    "flow datasets: object density 0.08",
    "image experiments: filter prior mean is the first observation",
];

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    fs::write(path, contents).map_err(Error::io(path))
}

fn series_csv(series: &[MetricSeries]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_series_csv(&mut buf, series)?;
    Ok(buf)
}

fn t_label(t: Option<usize>) -> String {
    t.map_or_else(|| "-1".to_string(), |t| t.to_string())
}

fn has_loglik(m: &MethodResult) -> bool {
    m.operators.iter().any(|r| !r.log_likelihoods.is_empty())
}

pub fn write_seed(dir: &Path, cfg: &ExperimentConfig, r: &SeedResult, format: Format) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, contents: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, contents)?;
        written.push(path);
        Ok(())
    };

    let mut rmse = vec![r.observation_rmse.clone()];
    rmse.extend(r.methods.iter().map(|m| m.state_rmse.clone()));
    put("state_rmse.csv", series_csv(&rmse)?)?;

    if let Some((truth, observed)) = &r.frames {
        let mut s = String::from("t,label,component,value\n");
        let mut emit = |label: &str, frames: &[Vector]| {
            for (t, x) in frames.iter().enumerate() {
                for (k, v) in x.iter().enumerate() {
                    let _ = writeln!(s, "{t},{label},{k},{v}");
                }
            }
        };
        emit("truth", truth);
        emit("observation", observed);
        for m in &r.methods {
            emit(m.method.name(), &m.estimates);
        }
        put("states.csv", s.into_bytes())?;
    }

    if cfg.snapshots {
        let mut s = String::from("t,method,row,col,value\n");
        for m in &r.methods {
            for rec in &m.operators {
                let Some(op) = &rec.operator else { continue };
                let t = t_label(rec.t);
                match op {
                    Operator::Dense(f) => {
                        for i in 0..f.nrows() {
                            for j in 0..f.ncols() {
                                let _ = writeln!(s, "{t},{},{i},{j},{}", m.method, f[(i, j)]);
                            }
                        }
                    }
                    Operator::Sparse(f) => {
                        for (i, j, v) in f.iter() {
                            let _ = writeln!(s, "{t},{},{i},{j},{v}", m.method);
                        }
                    }
                }
            }
        }
        put("operators.csv", s.into_bytes())?;
    }

    let mut s = String::from("t,method,overall,true_zero\n");
    for m in &r.methods {
        for rec in &m.operators {
            if let Some(e) = rec.errors {
                let tz = e.true_zero.map_or(String::new(), |v| v.to_string());
                let _ = writeln!(s, "{},{},{},{tz}", t_label(rec.t), m.method, e.overall);
            }
        }
    }
    put("errors.csv", s.into_bytes())?;

    if r.methods.iter().any(has_loglik) {
        let mut s = String::from("t,method,iteration,value\n");
        for m in r.methods.iter().filter(|m| has_loglik(m)) {
            for rec in &m.operators {
                for (k, v) in rec.log_likelihoods.iter().enumerate() {
                    let _ = writeln!(s, "{},{},{k},{v}", t_label(rec.t), m.method);
                }
            }
        }
        put("loglik.csv", s.into_bytes())?;
    }

    let predictions: Vec<&MethodResult> = r.methods.iter().filter(|m| m.prediction.is_some()).collect();
    if let Some(first) = predictions.first() {
        let mut series = vec![first.prediction.as_ref().unwrap().frozen.clone()];
        series.extend(predictions.iter().map(|m| m.prediction.as_ref().unwrap().rollout.clone()));
        put("prediction.csv", series_csv(&series)?)?;
        if format == Format::Svg {
            put("prediction.svg", line_plot("prediction RMSE", &series).into_bytes())?;
        }
    }

    if format == Format::Svg {
        put("state_rmse.svg", line_plot("state RMSE", &rmse).into_bytes())?;
        let errors: Vec<MetricSeries> = r
            .methods
            .iter()
            .filter_map(|m| {
                let pts: Vec<f64> = m.operators.iter().filter_map(|rec| rec.errors.map(|e| e.overall)).collect();
                (pts.len() > 1).then(|| MetricSeries::new(m.method.name(), 0, pts).expect("finite errors"))
            })
            .collect();
        if !errors.is_empty() {
            put("errors.svg", line_plot("operator error per update", &errors).into_bytes())?;
        }
    }
    Ok(written)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Per-seed scalar summaries: `(method, metric, value)`.
pub fn seed_summary(r: &SeedResult) -> Vec<(String, &'static str, f64)> {
    let mut rows = vec![(
        "observation".to_string(),
        "state_rmse_mean",
        r.observation_rmse.mean().expect("non-empty series"),
    )];
    for m in &r.methods {
        let name = m.method.name().to_string();
        rows.push((name.clone(), "state_rmse_mean", m.mean_rmse()));
        if let Some(e) = m.initial_error() {
            rows.push((name.clone(), "initial_error", e.overall));
        }
        if let Some(e) = m.final_error() {
            rows.push((name.clone(), "final_error", e.overall));
            if let Some(z) = e.true_zero {
                rows.push((name.clone(), "final_error_true_zero", z));
            }
        }
        if let Some(e) = m.mean_support_error() {
            rows.push((name.clone(), "mean_error", e));
        }
        if let Some(p) = &m.prediction {
            rows.push((name.clone(), "prediction_rmse_mean", p.rollout.mean().expect("horizon > 0")));
            rows.push((name.clone(), "frozen_rmse_mean", p.frozen.mean().expect("horizon > 0")));
        }
    }
    rows
}

pub fn write_experiment(out: &Path, cfg: &ExperimentConfig, results: &[SeedResult], format: Format) -> Result<()> {
    fs::create_dir_all(out).map_err(Error::io(out))?;
    let mut files = Vec::new();
    for r in results {
        files.extend(write_seed(&out.join(format!("seed-{}", r.seed)), cfg, r, format)?);
    }

    let mut summary = String::from("seed,method,metric,value\n");
    let mut keys: Vec<(String, &'static str)> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for r in results {
        for (method, metric, v) in seed_summary(r) {
            let _ = writeln!(summary, "{},{method},{metric},{v}", r.seed);
            match keys.iter().position(|k| k.0 == method && k.1 == metric) {
                Some(i) => values[i].push(v),
                None => {
                    keys.push((method, metric));
                    values.push(vec![v]);
                }
            }
        }
    }
    let summary_path = out.join("summary.csv");
    write_file(&summary_path, summary)?;
    files.push(summary_path);

    let mut agg = String::from("method,metric,n,mean,q05,median,q95\n");
    for ((method, metric), mut v) in keys.into_iter().zip(values) {
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let _ = writeln!(
            agg,
            "{method},{metric},{},{mean},{},{},{}",
            v.len(),
            quantile(&v, 0.05),
            quantile(&v, 0.5),
            quantile(&v, 0.95)
        );
    }
    let agg_path = out.join("aggregate.csv");
    write_file(&agg_path, agg)?;
    files.push(agg_path);

    let mut quant = String::from("t,method,n,q05,median,q95\n");
    if let Some(first) = results.first() {
        for (k, m) in first.methods.iter().enumerate() {
            for (u, rec) in m.operators.iter().enumerate() {
                let mut v: Vec<f64> = results
                    .iter()
                    .filter_map(|r| r.methods[k].operators.get(u).and_then(|x| x.errors).map(|e| e.overall))
                    .collect();
                if v.is_empty() {
                    continue;
                }
                v.sort_by(f64::total_cmp);
                let _ = writeln!(
                    quant,
                    "{},{},{},{},{},{}",
                    t_label(rec.t),
                    m.method,
                    v.len(),
                    quantile(&v, 0.05),
                    quantile(&v, 0.5),
                    quantile(&v, 0.95)
                );
            }
        }
    }
    let quant_path = out.join("error_quantiles.csv");
    write_file(&quant_path, quant)?;
    files.push(quant_path);

    write_manifest(out, "run", cfg, &files)
}

pub fn write_manifest(out: &Path, command: &str, cfg: &ExperimentConfig, files: &[PathBuf]) -> Result<()> {
    let rel: Vec<String> = files
        .iter()
        .map(|p| p.strip_prefix(out).unwrap_or(p).to_string_lossy().replace('\\', "/"))
        .collect();
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "seeds": cfg.seeds,
        "config": cfg,
        "config_toml": cfg.to_toml_string(),
        "rng": "ChaCha20 seeded with seed_from_u64(seed); stream 0 data, stream 1 initial transition",
        "assumed_defaults": ASSUMED_DEFAULTS,
        "files": rel,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out.join("manifest.json"), text + "\n")
}
