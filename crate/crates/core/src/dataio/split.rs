use std::collections::HashSet;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::log::InteractionLog;
use crate::error::{Error, Result};
use crate::seeding;
use crate::seqmodel::ItemId;

/// Ranked together with each held-out target.
pub const NUM_EVAL_NEGATIVES: usize = 100;

/// One user, one client. The id is the user's dense index in the log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub u32);

impl std::fmt::Display for ClientId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A user's private data after the leave-one-out split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientDataset {
    pub id: ClientId,
    /// Chronological, without the two held-out items.
    pub train: Vec<ItemId>,
    pub valid_target: ItemId,
    pub test_target: ItemId,
    pub valid_negatives: Vec<ItemId>,
    pub test_negatives: Vec<ItemId>,
}

impl ClientDataset {
    /// Number of training samples, `|train|`.
    pub fn n_k(&self) -> usize {
        self.train.len()
    }

    /// Input for validation ranking.
    pub fn valid_context(&self) -> &[ItemId] {
        &self.train
    }

    /// Input for test ranking: training items followed by the validation target.
    pub fn test_context(&self) -> Vec<ItemId> {
        let mut ctx = self.train.clone();
        ctx.push(self.valid_target);
        ctx
    }
}

/// Splits every user with at least `min_len` interactions into a client:
/// last item for test, second-to-last for validation, the rest for training.
///
/// Each held-out target gets 100 negatives drawn without replacement from
/// items the user never touched, seeded by `(seed, user)`.
pub fn build_clients(log: &InteractionLog, min_len: usize, seed: u64) -> Result<Vec<ClientDataset>> {
    if min_len < 3 {
        return Err(Error::config(format!("min_len must be at least 3, got {min_len}")));
    }
    let num_items = log.num_items();
    if num_items <= NUM_EVAL_NEGATIVES + 1 {
        return Err(Error::config(format!(
            "need more than {} items to draw {} negatives, log has {num_items}",
            NUM_EVAL_NEGATIVES + 1,
            NUM_EVAL_NEGATIVES
        )));
    }

    let mut per_user: Vec<Vec<(i64, ItemId)>> = vec![Vec::new(); log.num_users()];
    for r in &log.records {
        per_user[r.user as usize].push((r.timestamp, r.item));
    }

    per_user
        .into_par_iter()
        .enumerate()
        .filter(|(_, events)| events.len() >= min_len)
        .map(|(user, mut events)| {
            // stable: equal timestamps keep file order
            events.sort_by_key(|&(ts, _)| ts);
            let items: Vec<ItemId> = events.into_iter().map(|(_, i)| i).collect();
            split_user(ClientId(user as u32), items, num_items, seed)
        })
        .collect()
}

fn split_user(id: ClientId, mut items: Vec<ItemId>, num_items: usize, seed: u64) -> Result<ClientDataset> {
    let seen: HashSet<ItemId> = items.iter().copied().collect();
    let unseen: Vec<ItemId> = (0..num_items as ItemId).filter(|i| !seen.contains(i)).collect();
    if unseen.len() < NUM_EVAL_NEGATIVES {
        return Err(Error::config(format!(
            "user {id} interacted with {} of {num_items} items; cannot draw {NUM_EVAL_NEGATIVES} unseen negatives",
            seen.len()
        )));
    }
    let draw = |tag: u64| -> Vec<ItemId> {
        let mut rng = seeding::rng_for(&[seed, id.0 as u64, tag]);
        index::sample(&mut rng, unseen.len(), NUM_EVAL_NEGATIVES)
            .into_iter()
            .map(|i| unseen[i])
            .collect()
    };
    let test_target = items.pop().expect("min_len >= 3");
    let valid_target = items.pop().expect("min_len >= 3");
    Ok(ClientDataset {
        id,
        train: items,
        valid_target,
        test_target,
        valid_negatives: draw(seeding::TAG_NEGATIVES_VALID),
        test_negatives: draw(seeding::TAG_NEGATIVES_TEST),
    })
}
