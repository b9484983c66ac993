use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EdgError, Result};

/// How anchors are picked from a point set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnchorPolicy {
    /// Indices `floor(i * T / m)` for `i = 0..m`.
    EvenlySpaced,
    /// `m` indices sampled without replacement.
    UniformRandom { seed: u64 },
}

impl std::str::FromStr for AnchorPolicy {
    type Err = EdgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evenly_spaced" | "even" => Ok(AnchorPolicy::EvenlySpaced),
            "uniform_random" | "random" => Ok(AnchorPolicy::UniformRandom { seed: 0 }),
            other => Err(EdgError::arg(format!(
                "unknown anchor policy {other:?} (expected evenly_spaced or uniform_random)"
            ))),
        }
    }
}

/// Permutation of `0..total` with the chosen anchors first (ascending) and
/// the remaining points after them in their original order.
pub fn select_anchors(total: usize, m: usize, policy: AnchorPolicy) -> Result<Vec<usize>> {
    if m == 0 || m > total {
        return Err(EdgError::arg(format!("anchor count {m} must lie in 1..={total}")));
    }
    let mut chosen: Vec<usize> = match policy {
        AnchorPolicy::EvenlySpaced => (0..m).map(|i| i * total / m).collect(),
        AnchorPolicy::UniformRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample(&mut rng, total, m).into_vec()
        }
    };
    chosen.sort_unstable();

    let mut is_anchor = vec![false; total];
    for &i in &chosen {
        is_anchor[i] = true;
    }
    chosen.extend((0..total).filter(|&i| !is_anchor[i]));
    Ok(chosen)
}
