//! Ranking metrics, fairness variance, convergence detection and
//! communication accounting.

use serde::{Deserialize, Serialize};

use crate::dataio::ClientId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ranking result for one client's held-out target among 101 candidates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub client: ClientId,
    /// 1-based; ties count against the target.
    pub rank: usize,
    pub hr5: f64,
    pub ndcg5: f64,
    pub hr10: f64,
    pub ndcg10: f64,
}

impl EvalOutcome {
    pub fn from_rank(client: ClientId, rank: usize) -> Self {
        let (hr5, ndcg5) = hr_ndcg::<f64>(rank, 5);
        let (hr10, ndcg10) = hr_ndcg::<f64>(rank, 10);
        Self {
            client,
            rank,
            hr5,
            ndcg5,
            hr10,
            ndcg10,
        }
    }

    /// HR@10 + NDCG@10, the per-client performance score.
    pub fn performance(&self) -> f64 {
        self.hr10 + self.ndcg10
    }
}

/// Mean of each metric over a set of outcomes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub hr5: f64,
    pub ndcg5: f64,
    pub hr10: f64,
    pub ndcg10: f64,
}

impl MetricMeans {
    pub fn of(outcomes: &[EvalOutcome]) -> Self {
        if outcomes.is_empty() {
            return Self::default();
        }
        let n = outcomes.len() as f64;
        let sum = |f: fn(&EvalOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
        Self {
            hr5: sum(|o| o.hr5),
            ndcg5: sum(|o| o.ndcg5),
            hr10: sum(|o| o.hr10),
            ndcg10: sum(|o| o.ndcg10),
        }
    }
}

/// `1 + #{i ≠ target : score_i ≥ score_target}`.
pub fn rank_of_target<S: Scalar>(scores: &[S], target_index: usize) -> Result<usize> {
    if target_index >= scores.len() {
        return Err(Error::input(format!(
            "target index {target_index} outside {} scores",
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::input("non-finite score"));
    }
    let t = scores[target_index];
    Ok(1 + scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| i != target_index && s >= t)
        .count())
}

/// Hit and NDCG at cutoff `k` for a 1-based rank.
pub fn hr_ndcg<S: Scalar>(rank: usize, k: usize) -> (S, S) {
    if rank >= 1 && rank <= k {
        (S::one(), S::one() / S::from_count(rank + 1).log2())
    } else {
        (S::zero(), S::zero())
    }
}

/// Population variance of per-client scores.
pub fn fairness_variance<S: Scalar>(scores: &[S]) -> Result<S> {
    if scores.is_empty() {
        return Err(Error::input("fairness variance of an empty score list"));
    }
    let n = S::from_count(scores.len());
    let mean = scores.iter().copied().sum::<S>() / n;
    Ok(scores.iter().map(|&s| (s - mean) * (s - mean)).sum::<S>() / n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub scores: Vec<f64>,
    pub variance: f64,
}

impl FairnessReport {
    pub fn of(outcomes: &[EvalOutcome]) -> Result<Self> {
        let scores: Vec<f64> = outcomes.iter().map(EvalOutcome::performance).collect();
        let variance = fairness_variance(&scores)?;
        Ok(Self { scores, variance })
    }
}

/// Index of the first entry `r` whose running best is not beaten by more than
/// `tol` anywhere in the following `patience` entries. `None` if the series
/// ends before such a window completes.
pub fn convergence_round<S: Scalar>(history: &[S], patience: usize, tol: S) -> Option<usize> {
    let mut best = S::neg_infinity();
    for r in 0..history.len() {
        best = best.max(history[r]);
        let window_end = r + patience;
        if window_end >= history.len() {
            return None;
        }
        if history[r + 1..=window_end].iter().all(|&v| v <= best + tol) {
            return Some(r);
        }
    }
    None
}

/// Bytes on the wire per scalar.
pub const BYTES_PER_VALUE: usize = 8;
/// `n_k` and `p_k` ride along with each upload.
pub const METADATA_BYTES: usize = 16;

/// Download plus upload of the embedding table for every participant, plus
/// the per-upload metadata.
pub fn bytes_transmitted(participants: usize, embedding_entries: usize) -> u64 {
    (participants * (2 * BYTES_PER_VALUE * embedding_entries + METADATA_BYTES)) as u64
}
