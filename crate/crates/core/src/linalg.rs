//! Dense complex matrices sized for feed-space processing (tens of rows,
//! not thousands) plus the Hermitian positive-definite solve the precoder
//! is built on. The solve goes through a Cholesky factorisation; nothing
//! in this crate ever forms an explicit inverse.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row slices; every row must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        CMat {
            rows: n_rows,
            cols: n_cols,
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    /// Borrow row `i` as a slice.
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable borrow of row `i`.
    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` copied out.
    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Gram matrix `self^H * self` (always Hermitian positive semidefinite).
    pub fn gram(&self) -> CMat {
        let h = self.hermitian();
        h.matmul(self)
    }

    /// Sum of squared magnitudes of all entries (`trace(M M^H)`).
    pub fn squared_frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Complex dot product of a row vector with a column vector (no
/// conjugation; callers conjugate explicitly where the formula asks for it).
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------- Hermitian positive-definite solve ----------

/// Cholesky factor `L` (lower triangular, real positive diagonal) of a
/// Hermitian positive-definite matrix `A = L L^H`.
///
/// Fails with a numerical error if a diagonal pivot is not strictly
/// positive, which is how non-PD inputs surface.
pub fn cholesky(a: &CMat) -> Result<CMat> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::numerical("cholesky requires a square matrix"));
    }
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::numerical(format!(
                "matrix is not positive definite (pivot {d:.3e} at row {j})"
            )));
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `A X = B` for Hermitian positive-definite `A` via Cholesky
/// factorisation and two triangular substitutions per column of `B`.
pub fn solve_hermitian(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.n_rows();
    assert_eq!(b.n_rows(), n, "right-hand side has wrong row count");
    let l = cholesky(a)?;
    let mut x = CMat::zeros(n, b.n_cols());
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..b.n_cols() {
        // Forward substitution: L y = b.
        for i in 0..n {
            let mut s = b[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        // Back substitution: L^H x = y.
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)].re;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_cmat(rng: &mut StdRng, rows: usize, cols: usize) -> CMat {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        m
    }

    /// Independent dense solver (Gauss-Jordan with partial pivoting) used
    /// only as a cross-check for the Cholesky path.
    fn gauss_jordan_solve(a: &CMat, b: &CMat) -> CMat {
        let n = a.n_rows();
        let mut aug = CMat::zeros(n, n + b.n_cols());
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = a[(i, j)];
            }
            for j in 0..b.n_cols() {
                aug[(i, n + j)] = b[(i, j)];
            }
        }
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&p, &q| {
                    aug[(p, col)]
                        .norm()
                        .partial_cmp(&aug[(q, col)].norm())
                        .unwrap()
                })
                .unwrap();
            if pivot_row != col {
                for j in 0..aug.n_cols() {
                    let tmp = aug[(col, j)];
                    aug[(col, j)] = aug[(pivot_row, j)];
                    aug[(pivot_row, j)] = tmp;
                }
            }
            let pivot = aug[(col, col)];
            for j in 0..aug.n_cols() {
                aug[(col, j)] /= pivot;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let factor = aug[(i, col)];
                for j in 0..aug.n_cols() {
                    let sub = factor * aug[(col, j)];
                    aug[(i, j)] -= sub;
                }
            }
        }
        let mut x = CMat::zeros(n, b.n_cols());
        for i in 0..n {
            for j in 0..b.n_cols() {
                x[(i, j)] = aug[(i, n + j)];
            }
        }
        x
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = CMat::identity(3);
        let mut b = CMat::zeros(3, 2);
        b[(0, 0)] = c(1.0, 2.0);
        b[(2, 1)] = c(-0.5, 0.25);
        let x = solve_hermitian(&a, &b).unwrap();
        assert!(x.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn cholesky_solve_matches_independent_solver() {
        let mut rng = StdRng::seed_from_u64(7);
        for trial in 0..20 {
            let n = 2 + trial % 5;
            let m = random_cmat(&mut rng, n, n);
            // M^H M + I is Hermitian positive definite by construction.
            let mut a = m.gram();
            for i in 0..n {
                a[(i, i)] += c(1.0, 0.0);
            }
            let b = random_cmat(&mut rng, n, 3);
            let x = solve_hermitian(&a, &b).unwrap();
            let x_ref = gauss_jordan_solve(&a, &b);
            let diff = x.max_abs_diff(&x_ref);
            assert!(diff < 1e-11, "trial {trial}: solver mismatch {diff:.3e}");
            // Residual check: A x - b ~ 0.
            let resid = a.matmul(&x).max_abs_diff(&b);
            assert!(resid < 1e-11, "trial {trial}: residual {resid:.3e}");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let mut a = CMat::identity(2);
        a[(1, 1)] = c(-1.0, 0.0);
        assert!(cholesky(&a).is_err(), "indefinite matrix must be rejected");
    }

    #[test]
    fn hermitian_and_matmul_agree_with_hand_computation() {
        let h = CMat::from_rows(&[
            vec![c(1.0, 1.0), c(0.0, 2.0)],
            vec![c(3.0, 0.0), c(1.0, -1.0)],
        ]);
        let g = h.gram();
        // (H^H H)[0][0] = |1+i|^2 + |3|^2 = 2 + 9 = 11.
        assert!((g[(0, 0)] - c(11.0, 0.0)).norm() < 1e-14);
        // Gram matrices are Hermitian.
        assert!((g[(0, 1)] - g[(1, 0)].conj()).norm() < 1e-14);
        // trace(H H^H) equals the squared Frobenius norm.
        let total: f64 = h.squared_frobenius();
        assert!((total - (2.0 + 4.0 + 9.0 + 2.0)).abs() < 1e-14);
    }
}
