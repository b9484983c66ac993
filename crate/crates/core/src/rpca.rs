//! Robust PCA by alternating projections.
//!
//! Splits an observation `Y = L + S` into a rank-`r` part `L` and a sparse
//! part `S`. Each sweep projects `Y - S` onto rank-`r` matrices with a
//! truncated SVD, then re-estimates `S` by hard thresholding `Y - L` at
//!
//! ```text
//! zeta_k = beta * ( sigma_{r+1}(Y - S_{k-1}) + gamma^k * sigma_1(Y - S_{k-1}) )
//! ```
//!
//! The threshold shrinks geometrically towards the tail spectrum, so large
//! outliers are peeled off first and smaller ones once the low-rank estimate
//! has settled.

use serde::{Deserialize, Serialize};

use crate::error::{EdgError, Result};
use crate::numerics::{ensure_finite, hard_threshold, thin_svd, Matrix};

/// Tunables for [`rpca_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpcaConfig {
    /// Rank of the low-rank component (`r + 2` for a squared distance block).
    pub target_rank: usize,
    /// Threshold scale. `None` uses `1 / (2 sqrt(max(rows, cols)))`.
    pub beta: Option<f64>,
    /// Multiplier on `beta` for the initial outlier sweep `S_0 = HT(Y, beta_init_scale * beta * sigma_1(Y))`.
    pub beta_init_scale: f64,
    /// Geometric decay of the threshold, in `(0, 1)`.
    pub gamma: f64,
    pub max_iters: usize,
    /// Stop once `||Y - L - S||_F / ||Y||_F` drops below this.
    pub conv_tol: f64,
}

impl RpcaConfig {
    pub const DEFAULT_GAMMA: f64 = 0.7;
    pub const DEFAULT_CONV_TOL: f64 = 1e-9;
    pub const DEFAULT_MAX_ITERS: usize = 200;
    pub const DEFAULT_BETA_INIT_SCALE: f64 = 1.0;

    pub fn new(target_rank: usize) -> Self {
        RpcaConfig {
            target_rank,
            beta: None,
            beta_init_scale: Self::DEFAULT_BETA_INIT_SCALE,
            gamma: Self::DEFAULT_GAMMA,
            max_iters: Self::DEFAULT_MAX_ITERS,
            conv_tol: Self::DEFAULT_CONV_TOL,
        }
    }

    /// Settings that work well on corrupted anchor-target squared distance
    /// blocks: a conservative first sweep (`beta_init_scale = 4`) so the large
    /// but legitimate entries of a distance block survive, and a slower decay.
    pub fn distance_block(target_rank: usize) -> Self {
        RpcaConfig { beta_init_scale: 4.0, gamma: 0.8, max_iters: 300, ..RpcaConfig::new(target_rank) }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_beta_init_scale(mut self, scale: f64) -> Self {
        self.beta_init_scale = scale;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_conv_tol(mut self, conv_tol: f64) -> Self {
        self.conv_tol = conv_tol;
        self
    }

    /// Threshold scale actually used for a `rows x cols` observation.
    pub fn resolved_beta(&self, rows: usize, cols: usize) -> f64 {
        self.beta.unwrap_or_else(|| 1.0 / (2.0 * (rows.max(cols) as f64).sqrt()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_rank == 0 {
            return Err(EdgError::arg("target_rank must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(EdgError::arg(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.conv_tol.is_nan() || self.conv_tol <= 0.0 {
            return Err(EdgError::arg(format!("conv_tol must be positive, got {}", self.conv_tol)));
        }
        if self.max_iters == 0 {
            return Err(EdgError::arg("max_iters must be at least 1"));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(EdgError::arg(format!("beta must be positive, got {b}")));
            }
        }
        if !(self.beta_init_scale > 0.0 && self.beta_init_scale.is_finite()) {
            return Err(EdgError::arg(format!("beta_init_scale must be positive, got {}", self.beta_init_scale)));
        }
        Ok(())
    }
}

/// Output of [`rpca_solve`].
#[derive(Debug, Clone)]
pub struct RpcaResult {
    pub low_rank: Matrix,
    pub sparse: Matrix,
    pub iters: usize,
    /// `||Y - L - S||_F / ||Y||_F` at the returned iterate (0 for `Y = 0`).
    pub final_residual: f64,
    pub converged: bool,
}

impl RpcaResult {
    /// Number of entries flagged as outliers.
    pub fn outlier_count(&self) -> usize {
        self.sparse.iter().filter(|&&x| x != 0.0).count()
    }
}

fn relative_residual(y: &Matrix, l: &Matrix, s: &Matrix, y_norm: f64) -> f64 {
    let mut acc = 0.0;
    for ((a, b), c) in y.iter().zip(l.iter()).zip(s.iter()) {
        let d = a - b - c;
        acc += d * d;
    }
    acc.sqrt() / y_norm
}

/// Decompose `y` into low-rank plus sparse parts.
///
/// Hitting `max_iters` is not an error; check [`RpcaResult::converged`].
pub fn rpca_solve(y: &Matrix, cfg: &RpcaConfig) -> Result<RpcaResult> {
    cfg.validate()?;
    if y.nrows() == 0 || y.ncols() == 0 {
        return Err(EdgError::arg("observation must be nonempty"));
    }
    ensure_finite(y, "observation")?;
    let (rows, cols) = y.shape();
    let rank = cfg.target_rank;
    if rank > rows.min(cols) {
        return Err(EdgError::arg(format!("target_rank {rank} exceeds min({rows}, {cols})")));
    }

    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Ok(RpcaResult {
            low_rank: Matrix::zeros(rows, cols),
            sparse: Matrix::zeros(rows, cols),
            iters: 0,
            final_residual: 0.0,
            converged: true,
        });
    }

    let beta = cfg.resolved_beta(rows, cols);
    let sigma1_y = thin_svd(y)?.sigma[0];
    let mut sparse = hard_threshold(y, cfg.beta_init_scale * beta * sigma1_y);
    let mut low_rank = Matrix::zeros(rows, cols);
    let mut residual = relative_residual(y, &low_rank, &sparse, y_norm);
    let mut iters = 0;
    let mut decay = 1.0;

    while iters < cfg.max_iters {
        let svd = thin_svd(&(y - &sparse))?;
        let head = svd.sigma[0];
        let tail = svd.sigma.get(rank).copied().unwrap_or(0.0);

        let mut u = svd.u.columns(0, rank).into_owned();
        for j in 0..rank {
            u.column_mut(j).scale_mut(svd.sigma[j]);
        }
        low_rank = u * svd.v.columns(0, rank).transpose();

        iters += 1;
        decay *= cfg.gamma;
        let zeta = beta * (tail + decay * head);
        sparse = hard_threshold(&(y - &low_rank), zeta);

        residual = relative_residual(y, &low_rank, &sparse, y_norm);
        if !residual.is_finite() {
            return Err(EdgError::input("residual became non-finite"));
        }
        if residual < cfg.conv_tol {
            break;
        }
    }

    Ok(RpcaResult { converged: residual < cfg.conv_tol, low_rank, sparse, iters, final_residual: residual })
}
