//! Robust Euclidean distance geometry from anchor-target distances.
//!
//! Given exact squared distances among `m` anchors and an outlier-corrupted
//! block of squared distances from anchors to `n` targets, recover the
//! point configuration up to a rigid motion.
//!
//! ```
//! use redg_core::data::{halton_points, SynthConfig};
//! use redg_core::{procrustes_align, robust_edg, sqdist_blocks, EdgOptions, RpcaConfig};
//!
//! let truth = halton_points(&SynthConfig::new(60, 12, 2, 0.0, 0)).unwrap();
//! let blocks = sqdist_blocks(&truth, 12).unwrap();
//! let out = robust_edg(&blocks, 2, &RpcaConfig::distance_block(4), &EdgOptions::default()).unwrap();
//! let estimate = out.gram.coordinates(2).unwrap();
//! assert!(procrustes_align(&estimate, &truth).unwrap().rmse < 1e-6);
//! ```

pub mod data;
pub mod edg;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod numerics;
pub mod rpca;

pub use edg::{
    assemble_gram, compute_a, compute_b, extract_coordinates, nystrom_c, points_to_sqdist, robust_edg, split_blocks,
    EdgDiagnostics, EdgOptions, EdgOutput, GramBlocks, PointSet, SqDistBlocks,
};
pub use error::{EdgError, Result};
pub use evaluation::{aligned_rmse, procrustes_align, procrustes_align_with, AlignmentResult};
pub use experiment::{sqdist_blocks, SweepSummary, TrialRecord, TrialSettings};
pub use numerics::{Matrix, Vector};
pub use rpca::{rpca_solve, RpcaConfig, RpcaResult};
