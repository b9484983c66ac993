//! Rigid-motion-invariant accuracy: orthogonal Procrustes alignment and RMSE.

use crate::edg::PointSet;
use crate::error::{EdgError, Result};
use crate::numerics::{thin_svd, Matrix, Vector};

#[derive(Debug, Clone)]
pub struct AlignmentResult {
    /// Orthogonal `r x r`; a reflection unless the alignment forbids it.
    pub rotation: Matrix,
    pub translation: Vector,
    /// `sqrt( (1/T) sum_i ||R p_hat_i + t - p_i||^2 )`.
    pub rmse: f64,
}

impl AlignmentResult {
    /// Apply the alignment to a point set.
    pub fn apply(&self, points: &PointSet) -> Result<PointSet> {
        let mut moved = &self.rotation * points.coords();
        for mut col in moved.column_iter_mut() {
            col += &self.translation;
        }
        PointSet::new(moved)
    }
}

/// Best orthogonal map (reflections allowed) plus translation taking
/// `estimate` onto `truth`.
pub fn procrustes_align(estimate: &PointSet, truth: &PointSet) -> Result<AlignmentResult> {
    procrustes_align_with(estimate, truth, true)
}

/// [`procrustes_align`] with control over whether reflections are allowed.
pub fn procrustes_align_with(estimate: &PointSet, truth: &PointSet, allow_reflection: bool) -> Result<AlignmentResult> {
    if estimate.dim() != truth.dim() || estimate.count() != truth.count() {
        return Err(EdgError::arg(format!(
            "cannot align {}x{} onto {}x{}",
            estimate.dim(),
            estimate.count(),
            truth.dim(),
            truth.count()
        )));
    }
    let r = truth.dim();
    let mu_hat = estimate.centroid();
    let mu = truth.centroid();

    let centered = |p: &PointSet, c: &Vector| {
        let mut q = p.coords().clone();
        for mut col in q.column_iter_mut() {
            col -= c;
        }
        q
    };
    let a = centered(estimate, &mu_hat);
    let b = centered(truth, &mu);

    // maximize tr(R a b^T)  =>  R = U V^T for b a^T = U S V^T
    let cross = &b * a.transpose();
    let svd = thin_svd(&cross)?;
    let v_t = svd.v.transpose();
    let mut rotation = &svd.u * &v_t;
    if !allow_reflection && rotation.determinant() < 0.0 {
        // flip the direction of the smallest singular value (sorted last)
        let mut d = Matrix::identity(r, r);
        d[(r - 1, r - 1)] = -1.0;
        rotation = &svd.u * d * &v_t;
    }
    let translation = &mu - &rotation * &mu_hat;

    let diff = &rotation * a - b;
    let rmse = (diff.norm_squared() / truth.count() as f64).sqrt();
    Ok(AlignmentResult { rotation, translation, rmse })
}

/// RMSE after optimal alignment.
pub fn aligned_rmse(estimate: &PointSet, truth: &PointSet) -> Result<f64> {
    Ok(procrustes_align(estimate, truth)?.rmse)
}
