//! Transition estimation with entries tied to a shared parameter vector.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kalman::{LinearGaussianSsm, Observations, Retention};
use crate::linalg::{pinv_unchecked, Matrix, Vector, DEFAULT_RANK_TOLERANCE};
use crate::lock::to_state_space;
use crate::online::{run_online, Estimate, EstimationContext, LockConfig, RunOutput, TransitionEstimator};
use crate::operator::{Operator, SparseMatrix};

/// Integer labels `P`; entry `(i, j)` of `G` equals `theta[P_ij - 1]`, and
/// label zero marks a structural zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterMap {
    size: usize,
    /// Per row, sorted `(column, label)` pairs with nonzero labels.
    rows: Vec<Vec<(usize, usize)>>,
    alpha: usize,
}

impl ParameterMap {
    /// Builds a map from per-row `(column, label)` lists. Labels must be
    /// exactly `1..=alpha`.
    pub fn from_rows(size: usize, mut rows: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        if rows.len() != size {
            return Err(Error::InvalidMap(format!("expected {size} rows, got {}", rows.len())));
        }
        let mut max_label = 0;
        let mut seen = std::collections::BTreeSet::new();
        for (i, row) in rows.iter_mut().enumerate() {
            row.retain(|&(_, label)| label != 0);
            row.sort_unstable();
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidMap(format!("row {i} repeats a column")));
            }
            if let Some(&(j, _)) = row.last() {
                if j >= size {
                    return Err(Error::InvalidMap(format!("row {i} references column {j}")));
                }
            }
            for &(_, label) in row.iter() {
                max_label = max_label.max(label);
                seen.insert(label);
            }
        }
        if seen.len() != max_label {
            return Err(Error::InvalidMap(format!(
                "labels must be exactly 1..={max_label} without gaps"
            )));
        }
        Ok(Self {
            size,
            rows,
            alpha: max_label,
        })
    }

    /// Dense label grid, validated.
    pub fn from_labels(labels: &[Vec<usize>]) -> Result<Self> {
        let size = labels.len();
        if let Some(i) = labels.iter().position(|r| r.len() != size) {
            return Err(Error::InvalidMap(format!("row {i} has {} labels, expected {size}", labels[i].len())));
        }
        let rows = labels
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|&(_, p)| p != 0).collect())
            .collect();
        Self::from_rows(size, rows)
    }

    /// Parses one row per line of whitespace-separated non-negative labels.
    pub fn parse(text: &str) -> Result<Self> {
        let labels = text
            .lines()
            .enumerate()
            .filter(|(_, line)| !line.trim().is_empty())
            .map(|(n, line)| {
                line.split_whitespace()
                    .map(|tok| {
                        tok.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("line {}: invalid label {tok:?}", n + 1)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_labels(&labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let mut dense = vec![0; self.size];
            for &(j, p) in row {
                dense[j] = p;
            }
            let line: Vec<String> = dense.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn row(&self, i: usize) -> &[(usize, usize)] {
        &self.rows[i]
    }

    pub fn label(&self, i: usize, j: usize) -> usize {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => 0,
        }
    }

    /// Number of nonzero labels.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Renames labels: label `p` becomes `perm[p - 1]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.alpha {
            return Err(Error::InvalidMap("permutation length differs from alpha".into()));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, p)| (j, perm[p - 1])).collect())
            .collect();
        Self::from_rows(self.size, rows)
    }

    /// Support of `P` as a 0/1 matrix.
    pub fn mask(&self) -> SparseMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, _)| (j, 1.0)).collect())
            .collect();
        SparseMatrix::from_rows(self.size, self.size, rows).expect("validated map")
    }
}

/// One label per relative offset `(d_row, d_col)` with Chebyshev norm at most
/// `d`. Labels are numbered in row-major offset order over the offsets that
/// occur on the grid; pairs whose offset leaves the grid are zero.
pub fn build_parameter_map(grid: GridSpec, d: usize) -> ParameterMap {
    let di = d.min(grid.height.max(grid.width)) as isize;
    let mut used: BTreeMap<(isize, isize), usize> = BTreeMap::new();
    for dr in -di..=di {
        for dc in -di..=di {
            if dr.unsigned_abs() < grid.height && dc.unsigned_abs() < grid.width {
                let next = used.len() + 1;
                used.insert((dr, dc), next);
            }
        }
    }
    let rows = (0..grid.len())
        .map(|i| {
            let mut row: Vec<(usize, usize)> = used
                .iter()
                .filter_map(|(&(dr, dc), &label)| grid.offset(i, dr, dc).map(|j| (j, label)))
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    ParameterMap::from_rows(grid.len(), rows).expect("offset labels are contiguous")
}

/// `Xi_{ij} = sum of y_prev[k] over k with P_ik = j`.
pub fn build_xi(p: &ParameterMap, y_prev: &Vector) -> Result<Matrix> {
    if y_prev.len() != p.size {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, map has {} rows",
            y_prev.len(),
            p.size
        )));
    }
    let mut xi = Matrix::zeros(p.size, p.alpha);
    for (i, row) in p.rows.iter().enumerate() {
        for &(k, label) in row {
            if label == 0 || label > p.alpha {
                return Err(Error::InvalidMap(format!("label {label} out of range")));
            }
            xi[(i, label - 1)] += y_prev[k];
        }
    }
    Ok(xi)
}

/// Minimum-norm least-squares `theta` for `Xi theta = y_now`.
pub fn estimate_theta(xi: &Matrix, y_now: &Vector) -> Result<Vector> {
    if xi.nrows() != y_now.len() {
        return Err(Error::DimensionMismatch(format!(
            "Xi has {} rows, target has {}",
            xi.nrows(),
            y_now.len()
        )));
    }
    crate::error::ensure_finite("Xi", xi.as_slice())?;
    crate::error::ensure_finite("target", y_now.as_slice())?;
    Ok(pinv_unchecked(xi.as_view(), DEFAULT_RANK_TOLERANCE) * y_now)
}

/// `G_ij = theta[P_ij - 1]`, zero where `P_ij = 0`.
pub fn theta_to_g(theta: &Vector, p: &ParameterMap) -> Result<SparseMatrix> {
    if theta.len() != p.alpha {
        return Err(Error::DimensionMismatch(format!(
            "theta has length {}, map has {} labels",
            theta.len(),
            p.alpha
        )));
    }
    let rows = p
        .rows
        .iter()
        .map(|r| r.iter().map(|&(j, label)| (j, theta[label - 1])).collect())
        .collect();
    SparseMatrix::from_rows(p.size, p.size, rows)
}

/// Stacked regression over every transition in a window:
/// `[Xi(y_s); ...] theta = [y_{s+1}; ...]`.
pub fn estimate_theta_stacked(p: &ParameterMap, frames: &[&Vector]) -> Result<Vector> {
    if frames.len() < 2 {
        return Err(Error::InvalidInput("need at least two frames".into()));
    }
    let l = p.size;
    let n = frames.len() - 1;
    let blocks: Vec<Matrix> = (0..n).into_par_iter().map(|s| build_xi(p, frames[s])).collect::<Result<_>>()?;
    let mut xi = Matrix::zeros(n * l, p.alpha);
    let mut target = Vector::zeros(n * l);
    for (s, block) in blocks.iter().enumerate() {
        xi.view_mut((s * l, 0), (l, p.alpha)).copy_from(block);
        target.rows_mut(s * l, l).copy_from(frames[s + 1]);
    }
    estimate_theta(&xi, &target)
}

/// Estimator solving for the shared parameters over the whole window.
#[derive(Debug, Clone)]
pub struct SlockEstimator {
    pub map: ParameterMap,
}

impl TransitionEstimator for SlockEstimator {
    fn estimate(&mut self, ctx: &EstimationContext<'_>) -> Result<Estimate> {
        let frames: Vec<&Vector> = ctx.window.frames().collect();
        let theta = if self.map.alpha == 0 {
            Vector::zeros(0)
        } else {
            estimate_theta_stacked(&self.map, &frames)?
        };
        let g = theta_to_g(&theta, &self.map)?;
        to_state_space(ctx.model, Operator::Sparse(g))
    }
}

pub fn slock_run<'a>(
    model: &LinearGaussianSsm,
    observations: impl Into<Observations<'a>>,
    map: &ParameterMap,
    config: &LockConfig,
) -> Result<RunOutput> {
    slock_run_with(model, observations.into(), map, config, Retention::Full)
}

pub fn slock_run_with(
    model: &LinearGaussianSsm,
    obs: Observations<'_>,
    map: &ParameterMap,
    config: &LockConfig,
    retention: Retention,
) -> Result<RunOutput> {
    if map.size != model.obs_dim() {
        return Err(Error::DimensionMismatch(format!(
            "parameter map has {} rows for observation dimension {}",
            map.size,
            model.obs_dim()
        )));
    }
    let mut est = SlockEstimator { map: map.clone() };
    run_online(model, obs, config, Some(&mut est), retention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lock::estimate_g;
    use crate::online::ObservationWindow;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_by_two() -> ParameterMap {
        ParameterMap::from_labels(&[vec![1, 2], vec![2, 1]]).unwrap()
    }

    #[test]
    fn offset_maps() {
        let one = build_parameter_map(GridSpec::new(1, 1).unwrap(), 0);
        assert_eq!(one.alpha(), 1);
        assert_eq!(one.label(0, 0), 1);
        assert_eq!(build_parameter_map(GridSpec::square(3).unwrap(), 1).alpha(), 9);
        assert_eq!(build_parameter_map(GridSpec::square(25).unwrap(), 1).alpha(), 9);
        assert_eq!(build_parameter_map(GridSpec::new(1, 5).unwrap(), 1).alpha(), 3);
    }

    #[test]
    fn offsets_share_labels() {
        let grid = GridSpec::new(4, 5).unwrap();
        let p = build_parameter_map(grid, 1);
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                let (ri, ci) = grid.cell(i);
                let (rj, cj) = grid.cell(j);
                let off = (rj as isize - ri as isize, cj as isize - ci as isize);
                for i2 in 0..grid.len() {
                    if let Some(j2) = grid.offset(i2, off.0, off.1) {
                        assert_eq!(p.label(i, j), p.label(i2, j2));
                    }
                }
            }
        }
    }

    #[test]
    fn xi_examples() {
        let y = Vector::from_vec(vec![3.0, 5.0]);
        let xi = build_xi(&two_by_two(), &y).unwrap();
        assert_eq!(xi, Matrix::from_row_slice(2, 2, &[3.0, 5.0, 5.0, 3.0]));
        let diag = ParameterMap::from_labels(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(build_xi(&diag, &y).unwrap(), Matrix::from_row_slice(2, 1, &[3.0, 5.0]));
        assert_eq!(build_xi(&two_by_two(), &Vector::zeros(2)).unwrap(), Matrix::zeros(2, 2));
        assert!(build_xi(&two_by_two(), &Vector::zeros(3)).is_err());
    }

    #[test]
    fn map_validation() {
        assert!(ParameterMap::from_labels(&[vec![1, 3], vec![3, 1]]).is_err());
        assert!(ParameterMap::from_labels(&[vec![1, 2]]).is_err());
        assert!(ParameterMap::parse("1 0\n0 x\n").is_err());
        let p = ParameterMap::parse("1 2\n2 1\n").unwrap();
        assert_eq!(p, two_by_two());
        assert_eq!(ParameterMap::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn theta_examples() {
        let xi = Matrix::identity(3, 3);
        let theta = Vector::from_vec(vec![0.2, -1.0, 4.0]);
        assert_relative_eq!(estimate_theta(&xi, &theta).unwrap(), theta, epsilon = 1e-14);
        let g = theta_to_g(&Vector::from_vec(vec![0.7, -0.1]), &two_by_two()).unwrap().to_dense();
        assert_eq!(g, Matrix::from_row_slice(2, 2, &[0.7, -0.1, -0.1, 0.7]));
        assert_eq!(theta_to_g(&Vector::zeros(2), &two_by_two()).unwrap().to_dense(), Matrix::zeros(2, 2));
    }

    #[test]
    fn translation_stencil_is_recovered() {
        let grid = GridSpec::square(6).unwrap();
        let p = build_parameter_map(grid, 1);
        // One-cell shift right: x_{t+1}[r, c] = x_t[r, c - 1].
        let shift = |x: &Vector| {
            Vector::from_fn(grid.len(), |i, _| grid.offset(i, 0, -1).map_or(0.0, |j| x[j]))
        };
        let x0 = Vector::from_fn(grid.len(), |i, _| ((i * 7919) % 13) as f64 + 1.0);
        let x1 = shift(&x0);
        let theta = estimate_theta(&build_xi(&p, &x0).unwrap(), &x1).unwrap();
        let left_label = p.label(grid.index(2, 2), grid.index(2, 1));
        for (k, v) in theta.iter().enumerate() {
            let expected = if k + 1 == left_label { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-8, "theta[{k}] = {v}");
        }
    }

    #[test]
    fn all_zero_map_gives_zero_estimate() {
        let p = ParameterMap::from_labels(&[vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(p.alpha(), 0);
        let w = ObservationWindow::from_frames(&[Vector::from_vec(vec![1.0, 2.0]), Vector::from_vec(vec![2.0, 1.0])])
            .unwrap();
        let mut est = SlockEstimator { map: p };
        let model = LinearGaussianSsm::new(
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Vector::zeros(2),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let current = Operator::Dense(Matrix::identity(2, 2));
        let ctx = EstimationContext {
            t: 1,
            window: &w,
            current: &current,
            model: &model,
            prior: None,
        };
        assert_eq!(est.estimate(&ctx).unwrap().f_hat.to_dense(), Matrix::zeros(2, 2));
    }

    #[test]
    fn unique_labels_match_global_estimate() {
        let l = 3;
        let labels: Vec<Vec<usize>> = (0..l).map(|i| (0..l).map(|j| i * l + j + 1).collect()).collect();
        let p = ParameterMap::from_labels(&labels).unwrap();
        let frames: Vec<Vector> = (0..6)
            .map(|t| Vector::from_fn(l, |i, _| ((t * 5 + i * 3) % 7) as f64 - 2.5 + 0.1 * t as f64))
            .collect();
        let refs: Vec<&Vector> = frames.iter().collect();
        let theta = estimate_theta_stacked(&p, &refs).unwrap();
        let g = theta_to_g(&theta, &p).unwrap().to_dense();
        let w = ObservationWindow::from_frames(&frames).unwrap();
        let global = estimate_g(&w.y_now(), &w.y_prev()).unwrap();
        assert_relative_eq!(g, global, epsilon = 1e-10);
    }

    proptest! {
        #[test]
        fn estimate_respects_label_classes(
            h in 2usize..5, w in 2usize..5, d in 0usize..3,
            seed in prop::collection::vec(-2.0f64..2.0, 64),
        ) {
            let grid = GridSpec::new(h, w).unwrap();
            let p = build_parameter_map(grid, d);
            let n = grid.len();
            let frames: Vec<Vector> = (0..3).map(|t| Vector::from_fn(n, |i, _| seed[(t * n + i) % 64])).collect();
            let refs: Vec<&Vector> = frames.iter().collect();
            let g = theta_to_g(&estimate_theta_stacked(&p, &refs).unwrap(), &p).unwrap();
            let mut by_label: BTreeMap<usize, f64> = BTreeMap::new();
            for i in 0..n {
                for j in 0..n {
                    let label = p.label(i, j);
                    let v = g.get(i, j);
                    if label == 0 {
                        prop_assert_eq!(v, 0.0);
                    } else {
                        let first = *by_label.entry(label).or_insert(v);
                        prop_assert_eq!(first.to_bits(), v.to_bits());
                    }
                }
            }
        }

        #[test]
        fn relabeling_permutes_theta(
            perm_seed in prop::collection::vec(0usize..1000, 9),
            seed in prop::collection::vec(-2.0f64..2.0, 32),
        ) {
            let grid = GridSpec::square(4).unwrap();
            let p = build_parameter_map(grid, 1);
            let mut perm: Vec<usize> = (1..=9).collect();
            perm.sort_by_key(|&k| (perm_seed[k - 1], k));
            let q = p.relabel(&perm).unwrap();
            let y0 = Vector::from_fn(16, |i, _| seed[i]);
            let y1 = Vector::from_fn(16, |i, _| seed[16 + i]);
            let theta_p = estimate_theta(&build_xi(&p, &y0).unwrap(), &y1).unwrap();
            let theta_q = estimate_theta(&build_xi(&q, &y0).unwrap(), &y1).unwrap();
            for k in 0..9 {
                prop_assert!((theta_q[perm[k] - 1] - theta_p[k]).abs() < 1e-12 * (1.0 + theta_p[k].abs()));
            }
        }
    }
}
