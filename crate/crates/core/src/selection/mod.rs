//! Client eligibility and cluster-proportional participant sampling.

mod kmeans;
mod represent;
mod sampling;

pub use kmeans::{kmeans, Clustering};
pub use represent::{represent, ClientRepresentation};
pub use sampling::{apportion, proportional_sample};

use serde::{Deserialize, Serialize};

/// Warm-up gate: a client may participate once it holds at least
/// `min_samples` training items or once `warmup_rounds` global rounds have
/// elapsed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Eligibility {
    pub min_samples: usize,
    pub warmup_rounds: usize,
}

impl Default for Eligibility {
    fn default() -> Self {
        Self {
            min_samples: 20,
            warmup_rounds: 10,
        }
    }
}

impl Eligibility {
    pub fn admits(&self, n_k: usize, rounds_elapsed: usize) -> bool {
        n_k >= self.min_samples || rounds_elapsed >= self.warmup_rounds
    }
}

/// `|D_i| ≥ λ₁ or t_i ≥ λ₂`.
pub fn eligible(n_k: usize, rounds_elapsed: usize, lambda1: usize, lambda2: usize) -> bool {
    Eligibility {
        min_samples: lambda1,
        warmup_rounds: lambda2,
    }
    .admits(n_k, rounds_elapsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn either_criterion_admits() {
        assert!(eligible(10, 0, 5, 20));
        assert!(eligible(3, 25, 5, 20));
        assert!(!eligible(3, 0, 5, 20));
    }

    #[test]
    fn thresholds_are_inclusive() {
        assert!(eligible(5, 0, 5, 20));
        assert!(eligible(0, 20, 5, 20));
        assert!(!eligible(4, 19, 5, 20));
    }
}
