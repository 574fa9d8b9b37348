use rand::seq::index;

use super::kmeans::Clustering;
use crate::dataio::ClientId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding;

/// Largest-remainder apportionment of `budget` seats over groups of the
/// given sizes. `budget` is clamped to the total size. Ties in remainder go
/// to the larger group, then to the lower index.
pub fn apportion(sizes: &[usize], budget: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let budget = budget.min(total);
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| budget * s / total).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // remainders compared exactly as integers budget·s mod total
    order.sort_by_key(|&c| (std::cmp::Reverse(budget * sizes[c] % total), std::cmp::Reverse(sizes[c]), c));
    let assigned: usize = quotas.iter().sum();
    for &c in order.iter().take(budget - assigned) {
        quotas[c] += 1;
    }
    quotas
}

/// Samples `budget` clients across clusters in proportion to cluster size,
/// uniformly without replacement inside each cluster. Returns every client
/// when the budget covers them all. Output is sorted by client id.
pub fn proportional_sample<S: Scalar>(clustering: &Clustering<S>, budget: usize, seed: u64) -> Result<Vec<ClientId>> {
    if clustering.assignments.is_empty() || clustering.k() == 0 {
        return Err(Error::input("empty clustering"));
    }
    if budget == 0 {
        return Err(Error::input("sampling budget must be at least 1"));
    }
    let members = clustering.members();
    let quotas = apportion(&clustering.sizes(), budget);
    let mut rng = seeding::rng_for(&[seed, seeding::TAG_SAMPLE]);
    let mut picked: Vec<ClientId> = members
        .iter()
        .zip(&quotas)
        .flat_map(|(group, &q)| {
            index::sample(&mut rng, group.len(), q)
                .into_iter()
                .map(|i| group[i])
                .collect::<Vec<_>>()
        })
        .collect();
    picked.sort();
    Ok(picked)
}
