//! Server-side weighting of client uploads.
//!
//! `fairness_weights` blends two normalized factors per client:
//!
//! * performance: `p' = p / Σp`, then `(1/2)^{p'}` (larger for weaker
//!   clients), renormalized;
//! * size: `q = n / Σn`, then `√q` (flattens size differences), renormalized.
//!
//! The blend `o = α·perf + β·size` is normalized once more to give the final
//! weights. With `literal_normalization` the activated values are discarded
//! and the plain `p'` and `q` are blended instead.

use serde::{Deserialize, Serialize};

use crate::dataio::ClientId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// What a client sends to the server after local training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientUpdate<S> {
    pub client: ClientId,
    pub embedding: Matrix<S>,
    /// Training sample count.
    pub n_k: usize,
    /// HR@10 + NDCG@10 on the client's validation target.
    pub p_k: S,
}

impl<S: Scalar> ClientUpdate<S> {
    pub fn new(client: ClientId, embedding: Matrix<S>, n_k: usize, p_k: S) -> Result<Self> {
        if n_k == 0 {
            return Err(Error::input(format!("client {client}: n_k must be at least 1")));
        }
        if !p_k.is_finite() || p_k < S::zero() {
            return Err(Error::input(format!("client {client}: p_k must be finite and >= 0")));
        }
        if !embedding.is_finite() {
            return Err(Error::input(format!("client {client}: non-finite parameters")));
        }
        Ok(Self { client, embedding, n_k, p_k })
    }
}

/// Per-client aggregation weights, in the order of the updates they were
/// computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationWeights<S> {
    pub entries: Vec<(ClientId, S)>,
}

impl<S: Scalar> AggregationWeights<S> {
    pub fn values(&self) -> Vec<S> {
        self.entries.iter().map(|&(_, w)| w).collect()
    }

    pub fn get(&self, client: ClientId) -> Option<S> {
        self.entries.iter().find(|(c, _)| *c == client).map(|&(_, w)| w)
    }

    pub fn sum(&self) -> S {
        self.entries.iter().map(|&(_, w)| w).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessParams {
    pub alpha: f64,
    pub beta: f64,
    /// Blend the un-activated shares instead of the activated ones.
    pub literal_normalization: bool,
}

impl Default for FairnessParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            literal_normalization: false,
        }
    }
}

fn normalize<S: Scalar>(values: Vec<S>) -> Vec<S> {
    let total: S = values.iter().copied().sum();
    values.into_iter().map(|v| v / total).collect()
}

fn with_ids<S: Scalar>(updates: &[ClientUpdate<S>], weights: Vec<S>) -> AggregationWeights<S> {
    AggregationWeights {
        entries: updates.iter().map(|u| u.client).zip(weights).collect(),
    }
}

/// `n_k / Σ n`.
pub fn fedavg_weights<S: Scalar>(updates: &[ClientUpdate<S>]) -> Result<AggregationWeights<S>> {
    if updates.is_empty() {
        return Err(Error::input("no client updates"));
    }
    let sizes = updates.iter().map(|u| S::from_count(u.n_k)).collect();
    Ok(with_ids(updates, normalize(sizes)))
}

/// Fairness-aware weights; see the module docs for the pipeline.
///
/// When no client has a positive score yet the performance factor is uniform.
pub fn fairness_weights<S: Scalar>(updates: &[ClientUpdate<S>], params: FairnessParams) -> Result<AggregationWeights<S>> {
    if updates.is_empty() {
        return Err(Error::input("no client updates"));
    }
    let FairnessParams {
        alpha,
        beta,
        literal_normalization,
    } = params;
    if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.0) {
        return Err(Error::config(format!("need alpha, beta >= 0 with alpha + beta > 0, got {alpha}, {beta}")));
    }
    let count = updates.len();
    let half = S::lit(0.5);

    let p_total: S = updates.iter().map(|u| u.p_k).sum();
    let perf: Vec<S> = if p_total > S::zero() {
        let shares = normalize(updates.iter().map(|u| u.p_k).collect());
        if literal_normalization {
            shares
        } else {
            normalize(shares.into_iter().map(|p| half.powf(p)).collect())
        }
    } else {
        vec![S::one() / S::from_count(count); count]
    };

    let shares = normalize(updates.iter().map(|u| S::from_count(u.n_k)).collect());
    let size: Vec<S> = if literal_normalization {
        shares
    } else {
        normalize(shares.into_iter().map(|q| q.sqrt()).collect())
    };

    let (a, b) = (S::lit(alpha), S::lit(beta));
    let blended = perf.into_iter().zip(size).map(|(p, q)| a * p + b * q).collect();
    Ok(with_ids(updates, normalize(blended)))
}

/// Weighted sum of the uploaded embeddings. Accumulates in client-id order
/// so the result does not depend on upload order.
pub fn aggregate<S: Scalar>(updates: &[ClientUpdate<S>], weights: &AggregationWeights<S>) -> Result<Matrix<S>> {
    if updates.is_empty() {
        return Err(Error::input("no client updates"));
    }
    if weights.entries.len() != updates.len() {
        return Err(Error::input(format!(
            "{} weights for {} updates",
            weights.entries.len(),
            updates.len()
        )));
    }
    let mut order: Vec<&ClientUpdate<S>> = updates.iter().collect();
    order.sort_by_key(|u| u.client);
    let (rows, cols) = order[0].embedding.shape();
    let mut out = Matrix::zeros(rows, cols);
    for u in order {
        let w = weights
            .get(u.client)
            .ok_or_else(|| Error::input(format!("no weight for client {}", u.client)))?;
        out.axpy(&u.embedding, w)?;
    }
    Ok(out)
}
