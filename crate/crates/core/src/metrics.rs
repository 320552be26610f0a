//! Error metrics for state and operator estimates.

use std::io::Write;

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::operator::{Operator, SparseMatrix};

/// A labelled per-step series; `start` is the time index of the first value.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub label: String,
    pub start: usize,
    pub values: Vec<f64>,
}

impl MetricSeries {
    pub fn new(label: impl Into<String>, start: usize, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if label.contains(['\n', ',']) {
            return Err(Error::InvalidInput(format!("label {label:?} contains a separator")));
        }
        ensure_finite(&label, &values)?;
        Ok(Self { label, start, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(t, value)` pairs.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(k, &v)| (self.start + k, v))
    }

    pub fn mean(&self) -> Result<f64> {
        self.mean_where(|_| true)
    }

    /// Mean of the values whose time index satisfies `keep`.
    pub fn mean_where(&self, keep: impl Fn(usize) -> bool) -> Result<f64> {
        let (sum, n) = self
            .points()
            .filter(|&(t, _)| keep(t))
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        if n == 0 {
            return Err(Error::UndefinedMetric(format!("no values selected from {}", self.label)));
        }
        Ok(sum / n as f64)
    }
}

/// Writes the series as `t,label,value` rows under a header.
pub fn write_series_csv<W: Write>(mut out: W, series: &[MetricSeries]) -> Result<()> {
    writeln!(out, "t,label,value")?;
    for s in series {
        for (t, v) in s.points() {
            writeln!(out, "{t},{},{v}", s.label)?;
        }
    }
    Ok(())
}

pub fn rmse(a: &Vector, b: &Vector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("rmse of lengths {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::UndefinedMetric("rmse of empty vectors".into()));
    }
    masked_rmse(a.iter().copied().zip(b.iter().copied()), a.len(), "rmse")
}

/// Per-step RMSE between two aligned sequences.
pub fn rmse_series(label: impl Into<String>, start: usize, a: &[Vector], b: &[Vector]) -> Result<MetricSeries> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("sequences of lengths {} and {}", a.len(), b.len())));
    }
    let values = a.iter().zip(b).map(|(x, y)| rmse(x, y)).collect::<Result<_>>()?;
    MetricSeries::new(label, start, values)
}

fn masked_rmse(entries: impl Iterator<Item = (f64, f64)>, n_z: usize, what: &str) -> Result<f64> {
    if n_z == 0 {
        return Err(Error::UndefinedMetric(format!("{what} mask has no entries")));
    }
    let sum: f64 = entries.map(|(a, b)| (a - b).powi(2)).sum();
    Ok((sum / n_z as f64).sqrt())
}

fn check_shapes(a: (usize, usize), b: (usize, usize), mask: (usize, usize)) -> Result<()> {
    if a != b || a != mask {
        return Err(Error::DimensionMismatch(format!(
            "srmse shapes {a:?}, {b:?} and mask {mask:?} differ"
        )));
    }
    Ok(())
}

/// RMSE over the entries where `mask > 0`.
pub fn srmse(f_true: &Matrix, f_hat: &Matrix, mask: &Matrix) -> Result<f64> {
    check_shapes(f_true.shape(), f_hat.shape(), mask.shape())?;
    let selected: Vec<usize> = (0..mask.len()).filter(|&k| mask[k] > 0.0).collect();
    masked_rmse(selected.iter().map(|&k| (f_true[k], f_hat[k])), selected.len(), "srmse")
}

/// [`srmse`] restricted to masked entries whose true value is zero,
/// normalized by the number of such entries.
pub fn srmse_true_zero(f_true: &Matrix, f_hat: &Matrix, mask: &Matrix) -> Result<f64> {
    check_shapes(f_true.shape(), f_hat.shape(), mask.shape())?;
    let selected: Vec<usize> = (0..mask.len())
        .filter(|&k| mask[k] > 0.0 && f_true[k] == 0.0)
        .collect();
    masked_rmse(selected.iter().map(|&k| (0.0, f_hat[k])), selected.len(), "true-zero srmse")
}

/// [`srmse`] and [`srmse_true_zero`] for operators and a sparse mask, without
/// densifying.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportErrors {
    pub overall: f64,
    /// `None` when no masked true value is zero.
    pub true_zero: Option<f64>,
}

pub fn support_errors(f_true: &Operator, f_hat: &Operator, mask: &SparseMatrix) -> Result<SupportErrors> {
    check_shapes(f_true.shape(), f_hat.shape(), mask.shape())?;
    let (mut all_sum, mut all_n, mut zero_sum, mut zero_n) = (0.0, 0usize, 0.0, 0usize);
    for (i, j, w) in mask.iter() {
        if w > 0.0 {
            let t = f_true.get(i, j);
            let e = (t - f_hat.get(i, j)).powi(2);
            all_sum += e;
            all_n += 1;
            if t == 0.0 {
                zero_sum += e;
                zero_n += 1;
            }
        }
    }
    if all_n == 0 {
        return Err(Error::UndefinedMetric("srmse mask has no entries".into()));
    }
    Ok(SupportErrors {
        overall: (all_sum / all_n as f64).sqrt(),
        true_zero: (zero_n > 0).then(|| (zero_sum / zero_n as f64).sqrt()),
    })
}

/// Errors of two forecasts made at `cutoff` over the following steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRmse {
    /// Truth against `F^k x`, `k = 1, 2, ...`.
    pub rollout: MetricSeries,
    /// Truth against the observation at the cutoff.
    pub frozen: MetricSeries,
}

/// Compares `truth[cutoff + k]`, `k = 1..=horizon`, against a rollout of
/// `operator` from `state` and against `last_observation`.
pub fn prediction_rmse(
    truth: &[Vector],
    cutoff: usize,
    horizon: usize,
    state: &Vector,
    operator: &Operator,
    last_observation: &Vector,
    label: &str,
) -> Result<PredictionRmse> {
    if cutoff + horizon >= truth.len() {
        return Err(Error::InvalidInput(format!(
            "cutoff {cutoff} + horizon {horizon} exceeds {} frames",
            truth.len()
        )));
    }
    let mut x = state.clone();
    let mut rollout = Vec::with_capacity(horizon);
    let mut frozen = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        x = operator.apply(&x);
        let target = &truth[cutoff + k];
        rollout.push(rmse(target, &x)?);
        frozen.push(rmse(target, last_observation)?);
    }
    Ok(PredictionRmse {
        rollout: MetricSeries::new(label, cutoff + 1, rollout)?,
        frozen: MetricSeries::new("frozen", cutoff + 1, frozen)?,
    })
}
