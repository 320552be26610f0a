//! Transition operators in dense or compressed-row form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_bounds, clamp, Matrix, Vector};

/// Compressed sparse row matrix with sorted column indices in each row.
///
/// Stored entries may be explicit zeros; they take part in blending so that
/// the support of an operator only ever grows by union.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from per-row `(column, value)` lists. Columns within a
    /// row must be distinct; they are sorted here.
    pub fn from_rows(rows: usize, cols: usize, entries: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if entries.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "expected {rows} rows of entries, got {}",
                entries.len()
            )));
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in entries.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidInput(format!(
                        "duplicate entry ({i}, {}) in sparse matrix",
                        w[0].0
                    )));
                }
            }
            for (j, v) in row {
                if j >= cols {
                    return Err(Error::DimensionMismatch(format!(
                        "column {j} out of range for {cols} columns"
                    )));
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Keeps the nonzero entries of a dense matrix.
    pub fn from_dense(m: &Matrix) -> Self {
        let (rows, cols) = m.shape();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..rows {
            for j in 0..cols {
                let v = m[(i, j)];
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of stored entries (including explicit zeros).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            out[(i, j)] = v;
        }
        out
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        DVector::from_iterator(
            self.rows,
            (0..self.rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()),
        )
    }

    /// `self * b` with a dense right-hand side.
    pub fn mul_dense(&self, b: &Matrix) -> Matrix {
        assert_eq!(self.cols, b.nrows(), "sparse product dimension mismatch");
        let n = b.ncols();
        let mut out = Matrix::zeros(self.rows, n);
        for c in 0..n {
            let col = b.column(c);
            let col = col.as_slice();
            let mut dst = out.column_mut(c);
            for i in 0..self.rows {
                let mut acc = 0.0;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[p] * col[self.col_idx[p]];
                }
                dst[i] = acc;
            }
        }
        out
    }

    /// Entrywise combination over the union of both supports.
    fn zip_union(&self, other: &SparseMatrix, mut f: impl FnMut(f64, f64) -> f64) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(col_idx.capacity());
        row_ptr.push(0);
        for i in 0..self.rows {
            let (mut a, a_end) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut b, b_end) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while a < a_end || b < b_end {
                let ja = if a < a_end { self.col_idx[a] } else { usize::MAX };
                let jb = if b < b_end { other.col_idx[b] } else { usize::MAX };
                let (j, va, vb) = if ja == jb {
                    a += 1;
                    b += 1;
                    (ja, self.values[a - 1], other.values[b - 1])
                } else if ja < jb {
                    a += 1;
                    (ja, self.values[a - 1], 0.0)
                } else {
                    b += 1;
                    (jb, 0.0, other.values[b - 1])
                };
                col_idx.push(j);
                values.push(f(va, vb));
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// A state transition operator. Sparse operators keep the localized or
/// parameter-tied support of the estimators; dense ones are used for small
/// unconstrained models.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Dense(Matrix),
    Sparse(SparseMatrix),
}

/// Density at or below which [`Operator::auto`] picks the sparse form.
const SPARSE_DENSITY: f64 = 0.25;

impl Operator {
    /// Chooses a representation from the sparsity of `m`.
    pub fn auto(m: &Matrix) -> Self {
        let total = m.nrows() * m.ncols();
        let nnz = m.iter().filter(|v| **v != 0.0).count();
        if total >= 64 && (nnz as f64) <= SPARSE_DENSITY * total as f64 {
            Operator::Sparse(SparseMatrix::from_dense(m))
        } else {
            Operator::Dense(m.clone())
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Operator::Dense(m) => m.shape(),
            Operator::Sparse(s) => s.shape(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Operator::Dense(m) => m[(i, j)],
            Operator::Sparse(s) => s.get(i, j),
        }
    }

    /// Number of entries held in memory.
    pub fn stored_entries(&self) -> usize {
        match self {
            Operator::Dense(m) => m.len(),
            Operator::Sparse(s) => s.nnz(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Operator::Dense(m) => m.clone(),
            Operator::Sparse(s) => s.to_dense(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Operator::Sparse(_))
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            Operator::Dense(m) => m * x,
            Operator::Sparse(s) => s.mul_vec(x),
        }
    }

    /// `F V F^T` for symmetric `V`.
    pub fn sandwich(&self, v: &Matrix) -> Matrix {
        match self {
            Operator::Dense(f) => f * v * f.transpose(),
            Operator::Sparse(f) => {
                let fv = f.mul_dense(v);
                // F V F^T = F (F V)^T because V is symmetric.
                f.mul_dense(&fv.transpose())
            }
        }
    }

    /// Online blend `F - eta * crop(F - F_hat, -c, c)`. The result keeps the
    /// representation of `self`.
    pub fn blend(&self, estimate: &Operator, eta: f64, c: f64) -> Result<Operator> {
        if self.shape() != estimate.shape() {
            return Err(Error::DimensionMismatch(format!(
                "cannot blend {:?} operator with {:?} estimate",
                self.shape(),
                estimate.shape()
            )));
        }
        check_bounds(-c, c)?;
        let bound = eta * c;
        let step = |old: f64, new: f64| {
            let mut v = old - eta * clamp(old - new, -c, c);
            // Rounding of the subtraction may overshoot the bound by an ulp.
            while (v - old).abs() > bound {
                v = if v > old { v.next_down() } else { v.next_up() };
            }
            v
        };
        Ok(match self {
            Operator::Dense(old) => {
                let new = estimate.to_dense();
                Operator::Dense(old.zip_map(&new, step))
            }
            Operator::Sparse(old) => {
                let new = match estimate {
                    Operator::Sparse(s) => std::borrow::Cow::Borrowed(s),
                    Operator::Dense(m) => std::borrow::Cow::Owned(SparseMatrix::from_dense(m)),
                };
                Operator::Sparse(old.zip_union(&new, step))
            }
        })
    }
}

impl From<DMatrix<f64>> for Operator {
    fn from(m: DMatrix<f64>) -> Self {
        Operator::Dense(m)
    }
}

impl From<SparseMatrix> for Operator {
    fn from(s: SparseMatrix) -> Self {
        Operator::Sparse(s)
    }
}
