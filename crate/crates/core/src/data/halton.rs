use serde::{Deserialize, Serialize};

use crate::edg::PointSet;
use crate::error::{EdgError, Result};
use crate::numerics::Matrix;

/// Bases for successive coordinates.
pub const HALTON_PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut factor = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv_base;
    }
    value
}

/// Synthetic sensor-network layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub total: usize,
    pub anchors: usize,
    pub dim: usize,
    pub box_half_width: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(total: usize, anchors: usize, dim: usize, alpha: f64, seed: u64) -> Self {
        SynthConfig { total, anchors, dim, box_half_width: 100.0, alpha, seed }
    }

    pub fn targets(&self) -> usize {
        self.total - self.anchors
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > HALTON_PRIMES.len() {
            return Err(EdgError::arg(format!("dimension {} outside 1..={}", self.dim, HALTON_PRIMES.len())));
        }
        if self.anchors == 0 || self.anchors >= self.total {
            return Err(EdgError::arg(format!("anchor count {} must lie in 1..{}", self.anchors, self.total)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(EdgError::arg(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.box_half_width > 0.0 && self.box_half_width.is_finite()) {
            return Err(EdgError::arg("box half width must be positive"));
        }
        Ok(())
    }
}

/// Halton points in `[-w, w]^dim`: coordinate `j` of point `i` is the
/// radical inverse of `i + 1` in the `j`-th prime base. The first
/// `cfg.anchors` points serve as anchors.
pub fn halton_points(cfg: &SynthConfig) -> Result<PointSet> {
    cfg.validate()?;
    let w = cfg.box_half_width;
    let coords = Matrix::from_fn(cfg.dim, cfg.total, |j, i| {
        let u = radical_inverse(i as u64 + 1, HALTON_PRIMES[j]);
        -w + 2.0 * w * u
    });
    PointSet::new(coords)
}
