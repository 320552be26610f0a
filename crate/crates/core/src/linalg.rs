//! Dense matrix helpers shared by the filters and the operator estimators.
//!
//! Matrices are [`nalgebra::DMatrix<f64>`]. Anything that crosses a text or
//! file boundary is laid out row-major (see [`to_row_major`]).

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector, SymmetricEigen};

use crate::error::{ensure_finite, Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff used when none is given.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinvOptions {
    /// Singular values below `rank_tolerance * sigma_max` are treated as zero.
    pub rank_tolerance: f64,
}

impl Default for PinvOptions {
    fn default() -> Self {
        Self {
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
        }
    }
}

impl PinvOptions {
    pub fn new(rank_tolerance: f64) -> Result<Self> {
        if rank_tolerance.is_nan() || rank_tolerance < 0.0 {
            return Err(Error::InvalidInput(format!(
                "rank tolerance must be non-negative, got {rank_tolerance}"
            )));
        }
        Ok(Self { rank_tolerance })
    }
}

/// Moore-Penrose pseudo-inverse through the singular value decomposition.
pub fn pinv(m: &Matrix, opts: PinvOptions) -> Result<Matrix> {
    ensure_finite("pinv input", m.as_slice())?;
    Ok(pinv_unchecked(m.as_view(), opts.rank_tolerance))
}

pub(crate) fn pinv_unchecked(m: DMatrixView<'_, f64>, rank_tolerance: f64) -> Matrix {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Matrix::zeros(cols, rows);
    }
    let Some((u, sigma, v)) = thin_svd(m) else {
        return Matrix::zeros(cols, rows);
    };
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return Matrix::zeros(cols, rows);
    }
    let cutoff = rank_tolerance * sigma_max;

    // V * diag(1/s) * U^T over the retained directions.
    let kept: Vec<usize> = (0..sigma.len()).filter(|&j| sigma[j] > cutoff).collect();
    if kept.is_empty() {
        return Matrix::zeros(cols, rows);
    }
    let scaled_v = Matrix::from_fn(cols, kept.len(), |i, k| v[(i, kept[k])] / sigma[kept[k]]);
    let u_kept = u.select_columns(&kept);
    scaled_v * u_kept.transpose()
}

/// Thin SVD `m = U diag(s) V^T`. Returns `None` if the decomposition fails
/// to converge.
pub(crate) fn thin_svd(m: DMatrixView<'_, f64>) -> Option<(Matrix, Vec<f64>, Matrix)> {
    let (rows, cols) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm.thin_svd().ok()?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = rows.min(cols);
    Some((
        Matrix::from_fn(rows, k, |i, j| u[(i, j)]),
        (0..k).map(|i| s[i]).collect(),
        Matrix::from_fn(cols, k, |i, j| v[(i, j)]),
    ))
}

/// Singular values of `m` in decreasing order.
pub(crate) fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    match fm.singular_values() {
        Ok(s) => s,
        Err(_) => m.clone().svd(false, false).singular_values.as_slice().to_vec(),
    }
}

/// Elementwise clamp of every entry into `[lower, upper]`.
pub fn crop(f: &Matrix, lower: f64, upper: f64) -> Result<Matrix> {
    check_bounds(lower, upper)?;
    Ok(f.map(|v| clamp(v, lower, upper)))
}

pub(crate) fn check_bounds(lower: f64, upper: f64) -> Result<()> {
    if lower > upper || lower.is_nan() || upper.is_nan() {
        return Err(Error::InvalidBounds { lower, upper });
    }
    Ok(())
}

#[inline]
pub(crate) fn clamp(v: f64, lower: f64, upper: f64) -> f64 {
    v.max(lower).min(upper)
}

/// `(V + V^T) / 2`.
pub fn symmetrize(v: &Matrix) -> Matrix {
    let mut out = v.clone();
    symmetrize_in_place(&mut out);
    out
}

pub(crate) fn symmetrize_in_place(v: &mut Matrix) {
    let n = v.nrows();
    debug_assert_eq!(n, v.ncols());
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (v[(i, j)] + v[(j, i)]);
            v[(i, j)] = avg;
            v[(j, i)] = avg;
        }
    }
}

/// Symmetrizes `V` and clips negative eigenvalues to zero.
pub fn symmetrize_psd(v: &Matrix) -> Result<Matrix> {
    if !v.is_square() {
        return Err(Error::InvalidInput(format!(
            "symmetrize_psd expects a square matrix, got {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    ensure_finite("covariance", v.as_slice())?;
    let sym = symmetrize(v);
    if sym.nrows() == 0 {
        return Ok(sym);
    }
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&e| e >= 0.0) {
        return Ok(sym);
    }
    let clipped = eig.eigenvalues.map(|e| e.max(0.0));
    let q = &eig.eigenvectors;
    let mut out = q * Matrix::from_diagonal(&clipped) * q.transpose();
    symmetrize_in_place(&mut out);
    Ok(out)
}

/// Smallest eigenvalue of the symmetric part of `v`.
pub fn min_eigenvalue(v: &Matrix) -> f64 {
    if v.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(v))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_identity(m: &Matrix) -> bool {
    m.is_square()
        && m.iter().enumerate().all(|(idx, &v)| {
            let (i, j) = (idx % m.nrows(), idx / m.nrows());
            if i == j {
                v == 1.0
            } else {
                v == 0.0
            }
        })
}

/// Row-major copy of the entries.
pub fn to_row_major(m: &Matrix) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Matrix> {
    if entries.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    Ok(Matrix::from_row_slice(rows, cols, entries))
}

/// Solution of `S X = B` for symmetric positive definite `S`, or `None`
/// when the Cholesky factorization fails.
pub(crate) fn spd_solve(s: &Matrix, b: &Matrix) -> Option<(Matrix, nalgebra::Cholesky<f64, nalgebra::Dyn>)> {
    let chol = s.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut x = b.clone();
    solve_lower_blocked(l.as_view(), x.as_view_mut());
    solve_lower_transposed_blocked(l.as_view(), x.as_view_mut());
    Some((x, chol))
}

const SOLVE_BLOCK: usize = 96;

/// Forward substitution `L X = B` in place; the lower triangle of `l` is used.
fn solve_lower_blocked(l: DMatrixView<'_, f64>, mut b: DMatrixViewMut<'_, f64>) {
    let n = l.nrows();
    if n <= SOLVE_BLOCK {
        let tri = l.lower_triangle();
        tri.solve_lower_triangular_mut(&mut b);
        return;
    }
    let k = n / 2;
    let (mut b1, mut b2) = b.rows_range_pair_mut(0..k, k..n);
    solve_lower_blocked(l.view((0, 0), (k, k)), b1.as_view_mut());
    b2.gemm(-1.0, &l.view((k, 0), (n - k, k)), &b1, 1.0);
    solve_lower_blocked(l.view((k, k), (n - k, n - k)), b2);
}

/// Back substitution `L^T X = B` in place.
fn solve_lower_transposed_blocked(l: DMatrixView<'_, f64>, mut b: DMatrixViewMut<'_, f64>) {
    let n = l.nrows();
    if n <= SOLVE_BLOCK {
        let tri = l.lower_triangle();
        tri.tr_solve_lower_triangular_mut(&mut b);
        return;
    }
    let k = n / 2;
    let (mut b1, mut b2) = b.rows_range_pair_mut(0..k, k..n);
    solve_lower_transposed_blocked(l.view((k, k), (n - k, n - k)), b2.as_view_mut());
    let l21_t = l.view((k, 0), (n - k, k)).transpose();
    b1.gemm(-1.0, &l21_t, &b2, 1.0);
    solve_lower_transposed_blocked(l.view((0, 0), (k, k)), b1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn penrose_residuals(m: &Matrix, p: &Matrix) -> [f64; 4] {
        let scale_m = m.norm().max(1.0);
        let scale_p = p.norm().max(1.0);
        let mp = m * p;
        let pm = p * m;
        [
            (&mp * m - m).norm() / scale_m,
            (&pm * p - p).norm() / scale_p,
            (mp.transpose() - &mp).norm() / mp.norm().max(1.0),
            (pm.transpose() - &pm).norm() / pm.norm().max(1.0),
        ]
    }

    #[test]
    fn pinv_of_identity_is_identity() {
        let i3 = Matrix::identity(3, 3);
        let p = pinv(&i3, PinvOptions::default()).unwrap();
        assert_relative_eq!(p, i3, epsilon = 1e-14);
    }

    #[test]
    fn pinv_of_singular_diagonal() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 0.0]));
        let p = pinv(&m, PinvOptions::default()).unwrap();
        let expected = Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 0.0]));
        assert_relative_eq!(p, expected, epsilon = 1e-14);
    }

    #[test]
    fn pinv_of_rank_one_tall_matrix() {
        let m = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let p = pinv(&m, PinvOptions::default()).unwrap();
        assert_eq!(p.shape(), (2, 3));
        for r in penrose_residuals(&m, &p) {
            assert!(r < 1e-10, "penrose residual {r}");
        }
        // Closed form for rank one: M^+ = M^T / ||M||_F^2.
        let closed = m.transpose() / m.norm_squared();
        assert_relative_eq!(p, closed, epsilon = 1e-12);
    }

    #[test]
    fn pinv_rejects_non_finite() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(
            pinv(&m, PinvOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn pinv_of_zero_and_empty() {
        let z = Matrix::zeros(2, 3);
        assert_eq!(pinv(&z, PinvOptions::default()).unwrap(), Matrix::zeros(3, 2));
        let e = Matrix::zeros(0, 4);
        assert_eq!(pinv(&e, PinvOptions::default()).unwrap().shape(), (4, 0));
    }

    #[test]
    fn negative_tolerance_rejected() {
        assert!(PinvOptions::new(-1.0).is_err());
    }

    #[test]
    fn crop_clamps_entries() {
        let f = Matrix::from_row_slice(2, 2, &[0.7, -0.9, 0.1, 0.3]);
        let out = crop(&f, -0.5, 0.5).unwrap();
        assert_eq!(out, Matrix::from_row_slice(2, 2, &[0.5, -0.5, 0.1, 0.3]));
        assert_eq!(crop(&out, -0.5, 0.5).unwrap(), out);
        let big = Matrix::from_element(1, 1, 2.0);
        assert_eq!(crop(&big, -0.5, 0.5).unwrap()[(0, 0)], 0.5);
    }

    #[test]
    fn crop_rejects_inverted_bounds() {
        let f = Matrix::zeros(1, 1);
        assert!(matches!(crop(&f, 1.0, -1.0), Err(Error::InvalidBounds { .. })));
    }

    #[test]
    fn symmetrize_psd_cases() {
        let i2 = Matrix::identity(2, 2);
        assert_eq!(symmetrize_psd(&i2).unwrap(), i2);

        let v = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.3, 1.0]);
        let out = symmetrize_psd(&v).unwrap();
        assert_relative_eq!(out, Matrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]), epsilon = 1e-15);

        let d = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1e-12]));
        let out = symmetrize_psd(&d).unwrap();
        assert_relative_eq!(out, Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.0])), epsilon = 1e-15);

        assert!(symmetrize_psd(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn row_major_round_trip() {
        let m = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(to_row_major(&m), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(from_row_major(2, 3, &to_row_major(&m)).unwrap(), m);
        assert!(from_row_major(2, 2, &[1.0]).is_err());
    }

    #[test]
    fn blocked_spd_solve_matches_direct() {
        let n = 250;
        let a = Matrix::from_fn(n, n, |i, j| (((i * 31 + j * 17) % 23) as f64 - 11.0) / 7.0);
        let s = &a * a.transpose() + Matrix::identity(n, n);
        let b = Matrix::from_fn(n, 3, |i, j| (i + 2 * j) as f64 / n as f64);
        let (x, _) = spd_solve(&s, &b).unwrap();
        let residual = (&s * &x - &b).norm() / b.norm();
        assert!(residual < 1e-10, "residual {residual}");
    }

    /// `U diag(s) V^T` with orthonormal factors and singular values either
    /// zero or in `[0.1, 10]`, so the conditioning of the retained part is
    /// bounded.
    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (1usize..=20, 1usize..=20).prop_flat_map(|(r, c)| {
            let k = r.min(c);
            (
                prop::collection::vec(-1.0f64..1.0, r * r),
                prop::collection::vec(-1.0f64..1.0, c * c),
                prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.1f64..10.0], k),
            )
                .prop_map(move |(a, b, s)| {
                    let u = (Matrix::from_row_slice(r, r, &a) + Matrix::identity(r, r) * 2.0).qr().q();
                    let v = (Matrix::from_row_slice(c, c, &b) + Matrix::identity(c, c) * 2.0).qr().q();
                    let mut d = Matrix::zeros(r, c);
                    for (i, &sv) in s.iter().enumerate() {
                        d[(i, i)] = sv;
                    }
                    u * d * v.transpose()
                })
        })
    }

    proptest! {
        #[test]
        fn penrose_conditions_hold(m in matrix_strategy()) {
            let p = pinv(&m, PinvOptions::default()).unwrap();
            for r in penrose_residuals(&m, &p) {
                prop_assert!(r < 1e-8, "residual {}", r);
            }
        }

        #[test]
        fn pinv_is_an_involution_for_full_rank(n in 1usize..8, seed in prop::collection::vec(-1.0f64..1.0, 64)) {
            let m = Matrix::from_fn(n, n, |i, j| seed[(i * n + j) % 64]) + Matrix::identity(n, n) * 3.0;
            let back = pinv(&pinv(&m, PinvOptions::default()).unwrap(), PinvOptions::default()).unwrap();
            prop_assert!((&back - &m).norm() / m.norm() < 1e-8);
        }

        #[test]
        fn crop_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 9), a in -2.0f64..0.0, b in 0.0f64..2.0) {
            let f = Matrix::from_row_slice(3, 3, &v);
            let once = crop(&f, a, b).unwrap();
            prop_assert_eq!(crop(&once, a, b).unwrap(), once);
        }

        #[test]
        fn symmetrize_psd_has_no_negative_spectrum(v in prop::collection::vec(-2.0f64..2.0, 16)) {
            let m = Matrix::from_row_slice(4, 4, &v);
            let out = symmetrize_psd(&m).unwrap();
            prop_assert!(min_eigenvalue(&out) >= -1e-12);
        }
    }
}
