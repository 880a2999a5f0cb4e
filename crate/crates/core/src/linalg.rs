//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest eigenvalue tolerated before a symmetric matrix counts as singular.
pub const SINGULAR_EIGENVALUE: f64 = 1e-10;

/// Smallest eigenvalue of a symmetric matrix (`+inf` for a 0x0 matrix).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest singular value; zero for an empty matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Column means and the sample covariance (divisor `n - 1`) of the rows of `x`.
pub fn mean_and_covariance(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut cov = centered.transpose() * &centered / denom;
    symmetrize(&mut cov);
    (mean, cov)
}

/// Replaces `m` by `(m + m') / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let k = m.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Rows of `x` minus `center`.
pub fn center_rows(x: &DMatrix<f64>, center: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        row -= center.transpose();
    }
    out
}

/// Cholesky-backed solver for a covariance matrix that has passed the
/// eigenvalue guard.
pub struct SpdSolver {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SpdSolver {
    /// Fails with `SingularCovariance` when the smallest eigenvalue of
    /// `sigma + ridge * I` is at or below [`SINGULAR_EIGENVALUE`].
    pub fn new(sigma: &DMatrix<f64>, ridge: Option<f64>) -> Result<Self> {
        let mut s = sigma.clone();
        if let Some(r) = ridge {
            for i in 0..s.nrows() {
                s[(i, i)] += r;
            }
        }
        let min_eig = min_eigenvalue(&s);
        if !(min_eig > SINGULAR_EIGENVALUE) {
            return Err(Error::SingularCovariance {
                min_eigenvalue: min_eig,
            });
        }
        let chol = s.cholesky().ok_or(Error::SingularCovariance {
            min_eigenvalue: min_eig,
        })?;
        Ok(Self { chol })
    }

    /// `sigma^{-1} b`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }
}
