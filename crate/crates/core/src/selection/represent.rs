use serde::{Deserialize, Serialize};

use crate::dataio::ClientId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seqmodel::ItemId;
use crate::tensor::Matrix;

/// Short-term ‖ long-term interest vector, `2d` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientRepresentation<S> {
    pub client: ClientId,
    pub vector: Vec<S>,
}

fn mean_rows<S: Scalar>(embedding: &Matrix<S>, items: &[ItemId]) -> Vec<S> {
    let mut acc = vec![S::zero(); embedding.cols()];
    for &i in items {
        for (a, &e) in acc.iter_mut().zip(embedding.row(i as usize)) {
            *a += e;
        }
    }
    let n = S::from_count(items.len());
    acc.into_iter().map(|v| v / n).collect()
}

/// Mean embedding of the last `v1` items followed by the mean of the last
/// `v2` items of `sequence` (each window clipped to the sequence length).
pub fn represent<S: Scalar>(
    client: ClientId,
    sequence: &[ItemId],
    embedding: &Matrix<S>,
    v1: usize,
    v2: usize,
) -> Result<ClientRepresentation<S>> {
    if sequence.is_empty() {
        return Err(Error::input(format!("client {client} has an empty sequence")));
    }
    if v1 == 0 || v2 <= v1 {
        return Err(Error::config(format!("need v2 > v1 >= 1, got v1={v1} v2={v2}")));
    }
    if let Some(bad) = sequence.iter().find(|&&i| i as usize >= embedding.rows()) {
        return Err(Error::input(format!("item {bad} outside embedding table")));
    }
    let tail = |v: usize| &sequence[sequence.len().saturating_sub(v)..];
    let mut vector = mean_rows(embedding, tail(v1));
    vector.extend(mean_rows(embedding, tail(v2)));
    Ok(ClientRepresentation { client, vector })
}
