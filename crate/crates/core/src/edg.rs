//! Anchor-structured robust Euclidean distance geometry.
//!
//! Points are ordered anchors first. The squared distance matrix and the Gram
//! matrix split into blocks
//!
//! ```text
//!     D = | E   F |        X = | A   B |
//!         | F^T G |            | B^T C |
//! ```
//!
//! where only `E` (exact) and `F` (possibly corrupted) are observed. The Gram
//! matrix is taken about the anchor centroid, so `A` and `B` follow from `E`
//! and `F` by double centering, `F` is cleaned by robust PCA at rank `r + 2`,
//! and the unobserved `C` is filled in by the Nystrom extension `B^T A^+ B`.

use serde::Serialize;

use crate::error::{EdgError, Result};
use crate::numerics::{
    ensure_finite, pseudo_inverse, symmetrize, thin_svd, truncated_eig_psd, Matrix, TruncatedEig, Vector,
    DEFAULT_PINV_REL_TOL,
};
use crate::rpca::{rpca_solve, RpcaConfig};

/// An `r x T` matrix of point coordinates, one point per column.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Matrix,
}

impl PointSet {
    pub fn new(coords: Matrix) -> Result<Self> {
        if coords.nrows() == 0 || coords.ncols() == 0 {
            return Err(EdgError::input("point set needs at least one dimension and one point"));
        }
        ensure_finite(&coords, "coordinates")?;
        Ok(PointSet { coords })
    }

    /// Build from per-point coordinate rows (`points[i]` is point `i`).
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let count = points.len();
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(EdgError::input("points have inconsistent dimensions"));
        }
        PointSet::new(Matrix::from_fn(dim, count, |i, j| points[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.coords.nrows()
    }

    pub fn count(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    pub fn into_coords(self) -> Matrix {
        self.coords
    }

    pub fn point(&self, i: usize) -> Vector {
        self.coords.column(i).into_owned()
    }

    pub fn to_points(&self) -> Vec<Vec<f64>> {
        (0..self.count()).map(|j| self.coords.column(j).iter().copied().collect()).collect()
    }

    /// Reorder points so that point `perm[k]` becomes point `k`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.count() || perm.iter().any(|&i| i >= self.count()) {
            return Err(EdgError::arg("permutation does not match point count"));
        }
        let mut seen = vec![false; perm.len()];
        for &i in perm {
            if std::mem::replace(&mut seen[i], true) {
                return Err(EdgError::arg(format!("index {i} repeated in permutation")));
            }
        }
        Ok(PointSet { coords: Matrix::from_fn(self.dim(), self.count(), |i, j| self.coords[(i, perm[j])]) })
    }

    pub fn centroid(&self) -> Vector {
        self.coords.column_mean()
    }
}

/// Observed blocks of the squared distance matrix: `E` (`m x m`) and `F` (`m x n`).
#[derive(Debug, Clone)]
pub struct SqDistBlocks {
    e: Matrix,
    f: Matrix,
}

impl SqDistBlocks {
    /// Validates that `E` is a squared distance block (symmetric, zero
    /// diagonal, nonnegative up to rounding) and that `F` conforms. `F` may
    /// hold negative entries after corruption.
    pub fn new(e: Matrix, f: Matrix) -> Result<Self> {
        let m = e.nrows();
        if m == 0 || !e.is_square() {
            return Err(EdgError::arg(format!("E must be square and nonempty, got {}x{}", e.nrows(), e.ncols())));
        }
        if f.nrows() != m || f.ncols() == 0 {
            return Err(EdgError::arg(format!("F must be {m} x n with n >= 1, got {}x{}", f.nrows(), f.ncols())));
        }
        ensure_finite(&e, "E")?;
        ensure_finite(&f, "F")?;
        let scale = e.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1.0);
        let tol = 1e-9 * scale;
        for i in 0..m {
            if e[(i, i)].abs() > tol {
                return Err(EdgError::input(format!("E has nonzero diagonal entry at {i}")));
            }
            for j in 0..i {
                if (e[(i, j)] - e[(j, i)]).abs() > tol {
                    return Err(EdgError::input(format!("E is not symmetric at ({i}, {j})")));
                }
                if e[(i, j)] < -tol {
                    return Err(EdgError::input(format!("E has negative entry at ({i}, {j})")));
                }
            }
        }
        Ok(SqDistBlocks { e, f })
    }

    pub fn e(&self) -> &Matrix {
        &self.e
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    pub fn anchors(&self) -> usize {
        self.e.nrows()
    }

    pub fn targets(&self) -> usize {
        self.f.ncols()
    }

    pub fn with_f(&self, f: Matrix) -> Result<Self> {
        SqDistBlocks::new(self.e.clone(), f)
    }
}

/// `D = 1 diag(X)^T + diag(X) 1^T - 2X` with `X = P^T P`.
///
/// The result is mirrored from its upper triangle, its diagonal is zero and
/// rounding-level negatives are clamped to zero.
pub fn points_to_sqdist(points: &PointSet) -> Matrix {
    let p = points.coords();
    let gram = p.transpose() * p;
    let t = gram.nrows();
    let mut d = Matrix::zeros(t, t);
    for j in 0..t {
        for i in 0..j {
            let v = (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Take `E = D[..m, ..m]` and `F = D[..m, m..]`; the target-target block is dropped.
pub fn split_blocks(d: &Matrix, m: usize) -> Result<SqDistBlocks> {
    if !d.is_square() {
        return Err(EdgError::arg("distance matrix must be square"));
    }
    let t = d.nrows();
    if m == 0 || m >= t {
        return Err(EdgError::arg(format!("anchor count {m} must lie in 1..{t}")));
    }
    SqDistBlocks::new(d.view((0, 0), (m, m)).into_owned(), d.view((0, m), (m, t - m)).into_owned())
}

fn mean(m: &Matrix) -> f64 {
    m.sum() / (m.nrows() * m.ncols()) as f64
}

/// Anchor Gram block about the anchor centroid:
/// `A = -1/2 (E - E J/m - J E/m + mean(E) J)`, `J` the all-ones matrix.
pub fn compute_a(e: &Matrix) -> Matrix {
    let m = e.nrows();
    let mf = m as f64;
    let row_means: Vec<f64> = (0..m).map(|i| e.row(i).sum() / mf).collect();
    let col_means: Vec<f64> = (0..m).map(|j| e.column(j).sum() / mf).collect();
    let mu = mean(e);
    Matrix::from_fn(m, m, |i, j| -0.5 * (e[(i, j)] - row_means[i] - col_means[j] + mu))
}

/// Anchor-target Gram block about the anchor centroid:
/// `B = -1/2 (F - J F/m - E 1_{m x n}/m + mean(E) 1_{m x n})`.
pub fn compute_b(e: &Matrix, f: &Matrix) -> Result<Matrix> {
    let m = e.nrows();
    if !e.is_square() || f.nrows() != m {
        return Err(EdgError::arg(format!("E is {}x{} but F is {}x{}", e.nrows(), e.ncols(), f.nrows(), f.ncols())));
    }
    let mf = m as f64;
    let e_row_means: Vec<f64> = (0..m).map(|i| e.row(i).sum() / mf).collect();
    let f_col_means: Vec<f64> = (0..f.ncols()).map(|j| f.column(j).sum() / mf).collect();
    let mu = mean(e);
    Ok(Matrix::from_fn(m, f.ncols(), |i, j| -0.5 * (f[(i, j)] - f_col_means[j] - e_row_means[i] + mu)))
}

/// Nystrom extension `C = B^T A^+ B`, symmetrized.
pub fn nystrom_c(a: &Matrix, b: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(EdgError::arg("A must be square with as many rows as B"));
    }
    let a_pinv = symmetrize(&pseudo_inverse(a, rel_tol)?);
    Ok(symmetrize(&(b.transpose() * (a_pinv * b))))
}

/// `[[A, B], [B^T, C]]`, symmetrized.
pub fn assemble_gram(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix> {
    let m = a.nrows();
    let n = c.nrows();
    if !a.is_square() || !c.is_square() || b.shape() != (m, n) {
        return Err(EdgError::arg(format!(
            "blocks do not conform: A {:?}, B {:?}, C {:?}",
            a.shape(),
            b.shape(),
            c.shape()
        )));
    }
    let t = m + n;
    let mut x = Matrix::zeros(t, t);
    x.view_mut((0, 0), (m, m)).copy_from(a);
    x.view_mut((0, m), (m, n)).copy_from(b);
    x.view_mut((m, 0), (n, m)).copy_from(&b.transpose());
    x.view_mut((m, m), (n, n)).copy_from(c);
    Ok(symmetrize(&x))
}

fn coordinates_from_eig(eig: &TruncatedEig, r: usize, count: usize) -> Result<PointSet> {
    let mut coords = Matrix::zeros(r, count);
    for k in 0..eig.lambda.len().min(r) {
        let scale = eig.lambda[k].max(0.0).sqrt();
        for j in 0..count {
            coords[(k, j)] = scale * eig.u[(j, k)];
        }
    }
    PointSet::new(coords)
}

/// Rank-`r` PSD projection of a Gram estimate: `P = Lambda_r^{1/2} U_r^T`,
/// negative eigenvalues clamped to zero. Points come out centered wherever
/// the Gram matrix puts the origin (the anchor centroid for pipeline output).
pub fn extract_coordinates(x_hat: &Matrix, r: usize) -> Result<PointSet> {
    let t = x_hat.nrows();
    if r == 0 || r > t {
        return Err(EdgError::arg(format!("embedding dimension {r} outside 1..={t}")));
    }
    let eig = truncated_eig_psd(x_hat, r)?;
    coordinates_from_eig(&eig, r, t)
}

/// Gram blocks recovered by [`robust_edg`], with `C` kept implicit.
#[derive(Debug, Clone)]
pub struct GramBlocks {
    pub a: Matrix,
    pub b: Matrix,
    /// Symmetrized `A^+` used for the Nystrom block.
    pub a_pinv: Matrix,
}

impl GramBlocks {
    pub fn anchors(&self) -> usize {
        self.a.nrows()
    }

    pub fn targets(&self) -> usize {
        self.b.ncols()
    }

    /// `C = B^T A^+ B`.
    pub fn c(&self) -> Matrix {
        symmetrize(&(self.b.transpose() * (&self.a_pinv * &self.b)))
    }

    /// The full `T x T` Gram estimate.
    pub fn assemble(&self) -> Matrix {
        assemble_gram(&self.a, &self.b, &self.c()).expect("blocks conform by construction")
    }

    /// Same result as `extract_coordinates(&self.assemble(), r)` without
    /// forming the `T x T` matrix.
    ///
    /// The symmetrized estimate factors as `Phi K Phi^T` with
    /// `Phi = diag(I_m, B^T)` and `K = [[A, I], [I, A^+]]`. A thin QR
    /// `B^T = Q R` turns its nonzero spectrum into that of the small
    /// symmetric matrix `[[A, R^T], [R, R A^+ R^T]]`.
    pub fn coordinates(&self, r: usize) -> Result<PointSet> {
        let m = self.anchors();
        let n = self.targets();
        let t = m + n;
        if r == 0 || r > t {
            return Err(EdgError::arg(format!("embedding dimension {r} outside 1..={t}")));
        }
        let (q, rb) = self.b.transpose().qr().unpack();
        let p = rb.nrows();
        let a = symmetrize(&self.a);

        let k = m + p;
        let mut small = Matrix::zeros(k, k);
        small.view_mut((0, 0), (m, m)).copy_from(&a);
        small.view_mut((m, 0), (p, m)).copy_from(&rb);
        small.view_mut((0, m), (m, p)).copy_from(&rb.transpose());
        small.view_mut((m, m), (p, p)).copy_from(&symmetrize(&(&rb * &self.a_pinv * rb.transpose())));

        let keep = r.min(k);
        let eig = truncated_eig_psd(&small, keep)?;
        let mut u = Matrix::zeros(t, keep);
        u.view_mut((0, 0), (m, keep)).copy_from(&eig.u.rows(0, m));
        u.view_mut((m, 0), (n, keep)).copy_from(&(&q * eig.u.rows(m, p)));
        coordinates_from_eig(&TruncatedEig { u, lambda: eig.lambda }, r, t)
    }
}

/// Options for [`robust_edg`] beyond the RPCA configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgOptions {
    /// Relative cutoff for `A^+`.
    pub pinv_rel_tol: f64,
    /// Feed the observed `F` straight into the `B` formula (ablation).
    pub skip_rpca: bool,
}

impl Default for EdgOptions {
    fn default() -> Self {
        EdgOptions { pinv_rel_tol: DEFAULT_PINV_REL_TOL, skip_rpca: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgDiagnostics {
    pub rpca_iters: usize,
    pub rpca_residual: f64,
    pub rpca_converged: bool,
    pub rpca_skipped: bool,
    /// Entries of `F` flagged as outliers.
    pub outliers_detected: usize,
    /// Numerical rank of `A` at the pseudo-inverse cutoff.
    pub anchor_rank: usize,
    /// Present when the anchors do not affinely span the embedding space,
    /// in which case the Nystrom block is not exact.
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct EdgOutput {
    pub gram: GramBlocks,
    /// Denoised `F`.
    pub f_hat: Matrix,
    pub diagnostics: EdgDiagnostics,
}

impl EdgOutput {
    pub fn x_hat(&self) -> Matrix {
        self.gram.assemble()
    }
}

/// Structured robust EDG: `A` from `E`, `F` denoised by robust PCA at rank
/// `r + 2`, `B` from `E` and the denoised `F`, `C` by Nystrom.
///
/// `rpca_cfg.target_rank` must equal `r + 2`. When `F` has no more than
/// `r + 2` rows or columns there is no low-rank structure to exploit and the
/// observed block is used as-is (reported in the diagnostics).
pub fn robust_edg(blocks: &SqDistBlocks, r: usize, rpca_cfg: &RpcaConfig, opts: &EdgOptions) -> Result<EdgOutput> {
    if r == 0 {
        return Err(EdgError::arg("embedding dimension must be at least 1"));
    }
    if rpca_cfg.target_rank != r + 2 {
        return Err(EdgError::arg(format!("RPCA target rank must be r + 2 = {}, got {}", r + 2, rpca_cfg.target_rank)));
    }
    rpca_cfg.validate()?;

    let e = blocks.e();
    let f = blocks.f();
    let a = compute_a(e);

    let low_rank_room = r + 2 < f.nrows().min(f.ncols());
    let (f_hat, rpca_iters, rpca_residual, rpca_converged, outliers, skipped) = if opts.skip_rpca || !low_rank_room {
        (f.clone(), 0, 0.0, true, 0, true)
    } else {
        let res = rpca_solve(f, rpca_cfg)?;
        let outliers = res.outlier_count();
        (res.low_rank, res.iters, res.final_residual, res.converged, outliers, false)
    };

    let b = compute_b(e, &f_hat)?;
    let a_pinv = symmetrize(&pseudo_inverse(&a, opts.pinv_rel_tol)?);

    let a_sigma = thin_svd(&a)?.sigma;
    let smax = a_sigma[0];
    let cutoff = opts.pinv_rel_tol * smax * a.nrows() as f64;
    let anchor_rank = if smax == 0.0 { 0 } else { a_sigma.iter().filter(|&&s| s > cutoff).count() };
    let warning = (anchor_rank < r)
        .then(|| format!("anchor Gram block has rank {anchor_rank} < {r}; the Nystrom completion is inexact"));

    Ok(EdgOutput {
        gram: GramBlocks { a, b, a_pinv },
        f_hat,
        diagnostics: EdgDiagnostics {
            rpca_iters,
            rpca_residual,
            rpca_converged,
            rpca_skipped: skipped,
            outliers_detected: outliers,
            anchor_rank,
            warning,
        },
    })
}
