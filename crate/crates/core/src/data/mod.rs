//! Experiment inputs: synthetic point clouds, the outlier model, protein
//! structures and anchor selection.

mod anchors;
mod corruption;
mod halton;
mod pdb;

pub use anchors::{select_anchors, AnchorPolicy};
pub use corruption::{corrupt_block, CorruptionSpec};
pub use halton::{halton_points, radical_inverse, SynthConfig, HALTON_PRIMES};
pub use pdb::{parse_pdb, parse_pdb_file, parse_pdb_with, to_pdb_string, ProteinStructure, RecordFilter};
