//! Localized transition estimation on a grid.

use std::collections::HashMap;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kalman::{LinearGaussianSsm, Observations, Retention};
use crate::linalg::{pinv_unchecked, Matrix, DEFAULT_RANK_TOLERANCE};
use crate::lock::to_state_space;
use crate::online::{
    run_online, Estimate, EstimationContext, LockConfig, ObservationWindow, RunOutput, TransitionEstimator,
};
use crate::operator::{Operator, SparseMatrix};

/// Binary support `L = A + I` stored as sorted neighbor lists per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalizationMatrix {
    neighbors: Vec<Vec<usize>>,
}

impl LocalizationMatrix {
    /// Validates symmetry and the unit diagonal.
    pub fn from_neighbors(mut neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let l = neighbors.len();
        for (i, row) in neighbors.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            if row.last().is_some_and(|&j| j >= l) {
                return Err(Error::InvalidInput(format!("row {i} references a column outside 0..{l}")));
            }
            if row.binary_search(&i).is_err() {
                return Err(Error::InvalidInput(format!("row {i} is missing its diagonal entry")));
            }
        }
        let m = Self { neighbors };
        for i in 0..l {
            if let Some(&j) = m.neighbors[i].iter().find(|&&j| !m.contains(j, i)) {
                return Err(Error::InvalidInput(format!("adjacency is not symmetric at ({i}, {j})")));
            }
        }
        Ok(m)
    }

    /// All-ones support of size `l`.
    pub fn full(l: usize) -> Self {
        Self {
            neighbors: vec![(0..l).collect(); l],
        }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Number of ones in `L`.
    pub fn nnz(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// `N_l`, the largest neighborhood size.
    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> Matrix {
        let l = self.len();
        let mut m = Matrix::zeros(l, l);
        for (i, row) in self.neighbors.iter().enumerate() {
            for &j in row {
                m[(i, j)] = 1.0;
            }
        }
        m
    }

    /// Ones on the support, in sparse form.
    pub fn mask(&self) -> SparseMatrix {
        let rows = self.neighbors.iter().map(|r| r.iter().map(|&j| (j, 1.0)).collect()).collect();
        SparseMatrix::from_rows(self.len(), self.len(), rows).expect("sorted distinct neighbors")
    }
}

/// Chebyshev neighborhoods of radius `d` without wraparound.
pub fn build_adjacency(grid: GridSpec, d: usize) -> LocalizationMatrix {
    let di = d.min(grid.height.max(grid.width)) as isize;
    let neighbors = (0..grid.len())
        .map(|i| {
            let mut row = Vec::new();
            for dr in -di..=di {
                for dc in -di..=di {
                    if let Some(j) = grid.offset(i, dr, dc) {
                        row.push(j);
                    }
                }
            }
            row.sort_unstable();
            row
        })
        .collect();
    LocalizationMatrix { neighbors }
}

fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut p, mut q) = (0, 0);
    while p < a.len() || q < b.len() {
        let next = match (a.get(p), b.get(q)) {
            (Some(&x), Some(&y)) if x == y => {
                p += 1;
                q += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                p += 1;
                x
            }
            (Some(_), Some(&y)) => {
                q += 1;
                y
            }
            (Some(&x), None) => {
                p += 1;
                x
            }
            (None, Some(&y)) => {
                q += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// Localized estimate of `G` with the support of `L`.
///
/// Entry `(i, j)` comes from the least-squares fit restricted to the
/// components `k = N(i) ∪ N(j)`: the row of `Y_t[k]` for `i` times the
/// column of `Y_{t-1}[k]^+` for `j`. Identical supports share one
/// pseudo-inverse.
pub fn local_g(l_mat: &LocalizationMatrix, window: &ObservationWindow) -> Result<SparseMatrix> {
    if !window.is_full() {
        return Err(Error::InvalidInput("observation window is not full".into()));
    }
    let l = l_mat.len();
    if window.frame(0).len() != l {
        return Err(Error::DimensionMismatch(format!(
            "window frames have length {}, localization has {l} rows",
            window.frame(0).len()
        )));
    }
    let y_now = window.y_now();
    let y_prev = window.y_prev();
    crate::error::ensure_finite("window", y_now.as_slice())?;
    crate::error::ensure_finite("window", y_prev.as_slice())?;

    let mut groups: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
    for i in 0..l {
        for &j in l_mat.neighbors(i) {
            let k = union_sorted(l_mat.neighbors(i), l_mat.neighbors(j));
            groups.entry(k).or_default().push((i, j));
        }
    }

    let mut groups: Vec<_> = groups.into_iter().collect();
    groups.sort_unstable_by(|a, b| a.1[0].cmp(&b.1[0]));
    let entries: Vec<(usize, usize, f64)> = groups
        .par_iter()
        .flat_map_iter(|(k, pairs)| {
            if k.is_empty() {
                warn!("empty local support; entries set to zero");
                return pairs.iter().map(|&(i, j)| (i, j, 0.0)).collect::<Vec<_>>();
            }
            let prev_k = y_prev.select_rows(k.iter());
            let p = pinv_unchecked(prev_k.as_view(), DEFAULT_RANK_TOLERANCE);
            pairs
                .iter()
                .map(|&(i, j)| {
                    let pj = k.binary_search(&j).expect("j lies in its own neighborhood");
                    (i, j, y_now.row(i).dot(&p.column(pj).transpose()))
                })
                .collect()
        })
        .collect();

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); l];
    for (i, j, v) in entries {
        rows[i].push((j, v));
    }
    SparseMatrix::from_rows(l, l, rows)
}

/// Estimator using [`local_g`] on a fixed localization.
#[derive(Debug, Clone)]
pub struct LlockEstimator {
    pub localization: LocalizationMatrix,
}

impl TransitionEstimator for LlockEstimator {
    fn estimate(&mut self, ctx: &EstimationContext<'_>) -> Result<Estimate> {
        let g = local_g(&self.localization, ctx.window)?;
        to_state_space(ctx.model, Operator::Sparse(g))
    }
}

pub fn llock_run<'a>(
    model: &LinearGaussianSsm,
    observations: impl Into<Observations<'a>>,
    grid: GridSpec,
    d: usize,
    config: &LockConfig,
) -> Result<RunOutput> {
    llock_run_with(model, observations.into(), &build_adjacency(grid, d), config, Retention::Full)
}

pub fn llock_run_with(
    model: &LinearGaussianSsm,
    obs: Observations<'_>,
    localization: &LocalizationMatrix,
    config: &LockConfig,
    retention: Retention,
) -> Result<RunOutput> {
    if localization.len() != model.obs_dim() {
        return Err(Error::DimensionMismatch(format!(
            "localization has {} rows for observation dimension {}",
            localization.len(),
            model.obs_dim()
        )));
    }
    let mut est = LlockEstimator {
        localization: localization.clone(),
    };
    run_online(model, obs, config, Some(&mut est), retention)
}
