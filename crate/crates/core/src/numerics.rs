//! Dense linear-algebra primitives used by the reconstruction pipeline.
//!
//! Everything here works on [`Matrix`] (a column-major `nalgebra::DMatrix<f64>`).
//! The SVD and symmetric eigensolvers run on `faer`; nalgebra's own SVD can
//! return an inaccurate factorization on nearly rank-deficient inputs.

use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{EdgError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative cutoff for [`pseudo_inverse`].
pub const DEFAULT_PINV_REL_TOL: f64 = 1e-10;

/// Leading singular triplets `M ~ U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: Matrix,
    /// Nonincreasing, nonnegative.
    pub sigma: Vector,
    pub v: Matrix,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Leading eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct TruncatedEig {
    pub u: Matrix,
    pub lambda: Vector,
}

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(EdgError::input(format!("{what} contains non-finite entries")))
    }
}

fn ensure_nonempty(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(EdgError::arg(format!("{what} must have at least one row and column")));
    }
    Ok(())
}

fn to_faer(m: &Matrix) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full thin SVD with singular values sorted nonincreasing.
///
/// Returns `(U, sigma, V)` with `min(rows, cols)` columns each.
pub fn thin_svd(m: &Matrix) -> Result<TruncatedSvd> {
    ensure_nonempty(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let svd = to_faer(m).thin_svd().map_err(|e| EdgError::input(format!("SVD did not converge: {e:?}")))?;
    let k = m.nrows().min(m.ncols());
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    let (u_raw, v_raw) = (from_faer(svd.U()), from_faer(svd.V()));
    let mut u = Matrix::zeros(m.nrows(), k);
    let mut v = Matrix::zeros(m.ncols(), k);
    let mut sigma = Vector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_raw.column(src));
        sigma[dst] = s[src].max(0.0);
    }
    Ok(TruncatedSvd { u, sigma, v })
}

/// The `k` leading singular triplets of `m`.
pub fn truncated_svd(m: &Matrix, k: usize) -> Result<TruncatedSvd> {
    ensure_nonempty(m, "matrix")?;
    let max_k = m.nrows().min(m.ncols());
    if k == 0 || k > max_k {
        return Err(EdgError::arg(format!("rank {k} outside 1..={max_k}")));
    }
    let full = thin_svd(m)?;
    Ok(TruncatedSvd {
        u: full.u.columns(0, k).into_owned(),
        sigma: full.sigma.rows(0, k).into_owned(),
        v: full.v.columns(0, k).into_owned(),
    })
}

/// `(M + M^T) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// The `k` algebraically largest eigenpairs of a symmetric matrix.
///
/// The input is symmetrized first. Negative eigenvalues are returned as-is.
pub fn truncated_eig_psd(m: &Matrix, k: usize) -> Result<TruncatedEig> {
    ensure_nonempty(m, "matrix")?;
    if !m.is_square() {
        return Err(EdgError::arg(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(EdgError::arg(format!("rank {k} outside 1..={n}")));
    }
    ensure_finite(m, "matrix")?;

    let eig = to_faer(&symmetrize(m))
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| EdgError::input(format!("eigendecomposition did not converge: {e:?}")))?;
    let values = eig.S().column_vector();
    let vectors = from_faer(eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut u = Matrix::zeros(n, k);
    let mut lambda = Vector::zeros(k);
    for (dst, &src) in order.iter().take(k).enumerate() {
        u.set_column(dst, &vectors.column(src));
        lambda[dst] = values[src];
    }
    Ok(TruncatedEig { u, lambda })
}

/// Moore-Penrose pseudo-inverse with spectral cutoff
/// `sigma_i <= rel_tol * sigma_max * max(rows, cols)` treated as zero.
pub fn pseudo_inverse(m: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if rel_tol.is_nan() || rel_tol <= 0.0 {
        return Err(EdgError::arg(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let svd = thin_svd(m)?;
    let (rows, cols) = m.shape();
    let smax = svd.sigma.iter().copied().fold(0.0, f64::max);
    let mut out = Matrix::zeros(cols, rows);
    if smax == 0.0 {
        return Ok(out);
    }
    let cutoff = rel_tol * smax * rows.max(cols) as f64;
    for (j, &s) in svd.sigma.iter().enumerate() {
        if s > cutoff {
            let vj = svd.v.column(j);
            let uj = svd.u.column(j);
            out += (vj * uj.transpose()) / s;
        }
    }
    Ok(out)
}

/// Number of singular values strictly above `rel * sigma_max`.
pub fn numerical_rank(m: &Matrix, rel: f64) -> Result<usize> {
    let svd = thin_svd(m)?;
    let smax = svd.sigma.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(svd.sigma.iter().filter(|&&s| s > rel * smax).count())
}

/// Entrywise hard thresholding: keep entries with `|x| > zeta`, zero the rest.
pub fn hard_threshold(m: &Matrix, zeta: f64) -> Matrix {
    m.map(|x| if x.abs() > zeta { x } else { 0.0 })
}
