use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use super::log::InteractionLog;
use crate::error::{Error, Result};
use crate::seeding;

/// Clustered Markov-chain interaction generator.
///
/// Each latent cluster owns a disjoint block of preferred items and a sparse
/// transition chain over that block. A client follows its cluster's chain with
/// probability `1 - noise` and jumps to a uniformly random catalog item
/// otherwise. Sequence lengths are log-uniform in `[min_len, max_len]`, which
/// gives the heavy size imbalance between clients.
///
/// With `home_items > 0` every client also owns a small personal subset of its
/// block; entering the block (at the start or after a jump) lands on one of
/// those items instead of a uniform block item, and with probability `revisit`
/// any step returns to one of them.
///
/// With `length_clusters` a client's cluster follows from where its length
/// falls in the log-length range, so the first cluster holds the shortest
/// sequences and the last the longest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_clients: usize,
    pub num_items: usize,
    pub num_clusters: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub noise: f64,
    /// Successors per preferred item in a cluster chain.
    pub branching: usize,
    /// Size of each client's personal entry set; 0 disables it.
    pub home_items: usize,
    pub revisit: f64,
    pub length_clusters: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_clients: 200,
            num_items: 500,
            num_clusters: 4,
            min_len: 5,
            max_len: 80,
            noise: 0.2,
            branching: 3,
            home_items: 0,
            revisit: 0.0,
            length_clusters: false,
            seed: 0,
        }
    }
}

struct ClusterChain {
    items: Vec<u32>,
    /// Per position in `items`: successor positions and their sampler.
    successors: Vec<(Vec<usize>, WeightedIndex<f64>)>,
}

impl ClusterChain {
    fn position(&self, item: u32) -> Option<usize> {
        self.items.iter().position(|&i| i == item)
    }
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<InteractionLog> {
    if cfg.num_items <= 101 {
        return Err(Error::config(format!("num_items must exceed 101, got {}", cfg.num_items)));
    }
    if cfg.num_clusters == 0 || cfg.num_clients == 0 {
        return Err(Error::config("num_clusters and num_clients must be positive"));
    }
    if cfg.min_len < 3 || cfg.min_len > cfg.max_len {
        return Err(Error::config(format!(
            "sequence length range [{}, {}] is degenerate (need 3 <= min <= max)",
            cfg.min_len, cfg.max_len
        )));
    }
    if !(0.0..=1.0).contains(&cfg.noise) {
        return Err(Error::config(format!("noise {} outside [0, 1]", cfg.noise)));
    }
    if !(0.0..=1.0).contains(&cfg.revisit) || cfg.noise + cfg.revisit > 1.0 {
        return Err(Error::config(format!(
            "revisit {} outside [0, 1 - noise]",
            cfg.revisit
        )));
    }
    let block = cfg.num_items / (2 * cfg.num_clusters);
    if block < 2 {
        return Err(Error::config("too many clusters for the catalog size"));
    }
    let branching = cfg.branching.clamp(1, block - 1);

    let mut rng = seeding::rng_for(&[cfg.seed, seeding::TAG_SYNTHETIC]);
    let mut catalog: Vec<u32> = (0..cfg.num_items as u32).collect();
    catalog.shuffle(&mut rng);

    let chains: Vec<ClusterChain> = catalog
        .chunks(block)
        .take(cfg.num_clusters)
        .map(|items| {
            let successors = (0..items.len())
                .map(|pos| {
                    let others: Vec<usize> = (0..items.len()).filter(|&o| o != pos).collect();
                    let next: Vec<usize> = others.choose_multiple(&mut rng, branching).copied().collect();
                    let weights: Vec<f64> = next.iter().map(|_| rng.gen_range(0.2..1.0)).collect();
                    (next, WeightedIndex::new(weights).expect("positive weights"))
                })
                .collect();
            ClusterChain {
                items: items.to_vec(),
                successors,
            }
        })
        .collect();

    let (ln_lo, ln_hi) = ((cfg.min_len as f64).ln(), (cfg.max_len as f64 + 1.0).ln());
    let mut triples = Vec::new();
    for user in 0..cfg.num_clients {
        let (cluster, len) = if cfg.length_clusters {
            let u: f64 = rng.gen_range(0.0..1.0);
            let len = (ln_lo + u * (ln_hi - ln_lo)).exp().floor() as usize;
            ((u * cfg.num_clusters as f64) as usize, len)
        } else {
            let cluster = rng.gen_range(0..cfg.num_clusters);
            (cluster, rng.gen_range(ln_lo..=ln_hi).exp().floor() as usize)
        };
        let chain = &chains[cluster];
        let len = len.clamp(cfg.min_len, cfg.max_len);
        let home: Vec<u32> = if cfg.home_items > 0 {
            chain.items.choose_multiple(&mut rng, cfg.home_items.min(block)).copied().collect()
        } else {
            chain.items.clone()
        };
        let mut ts: i64 = rng.gen_range(0..1_000_000);
        let mut current: Option<u32> = None;
        for _ in 0..len {
            let jump = rng.gen::<f64>();
            let item = if jump < cfg.noise {
                rng.gen_range(0..cfg.num_items as u32)
            } else if jump < cfg.noise + cfg.revisit && cfg.home_items > 0 {
                *home.choose(&mut rng).expect("non-empty home set")
            } else {
                match current.and_then(|c| chain.position(c)) {
                    Some(pos) => {
                        let (next, sampler) = &chain.successors[pos];
                        chain.items[next[sampler.sample(&mut rng)]]
                    }
                    None => *home.choose(&mut rng).expect("non-empty block"),
                }
            };
            triples.push((user.to_string(), item.to_string(), ts));
            ts += rng.gen_range(1..3600);
            current = Some(item);
        }
    }
    Ok(InteractionLog::from_labelled(triples))
}
