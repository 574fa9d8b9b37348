use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataio::ClientId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering<S> {
    /// Client behind each point, in input order.
    pub clients: Vec<ClientId>,
    /// Cluster index of each point, in input order.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<S>>,
    /// Within-cluster sum of squared distances.
    pub inertia: S,
    /// Inertia after each Lloyd iteration.
    pub inertia_history: Vec<S>,
}

impl<S: Scalar> Clustering<S> {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Members of each cluster, in input order.
    pub fn members(&self) -> Vec<Vec<ClientId>> {
        let mut out = vec![Vec::new(); self.k()];
        for (&c, &a) in self.clients.iter().zip(&self.assignments) {
            out[a].push(c);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k()];
        for &a in &self.assignments {
            out[a] += 1;
        }
        out
    }
}

fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

fn nearest<S: Scalar>(p: &[S], centroids: &[Vec<S>]) -> (usize, S) {
    let mut best = (0, sq_dist(p, &centroids[0]));
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seeding<S: Scalar>(points: &[Vec<S>], k: usize, rng: &mut seeding::Rng) -> Vec<Vec<S>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0]).as_f64()).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every remaining point coincides with a centroid
            Err(_) => rng.gen_range(0..points.len()),
        };
        centroids.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centroids[centroids.len() - 1]).as_f64());
        }
    }
    centroids
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iter` iterations have run.
///
/// A cluster that empties takes over the point farthest from its centroid in
/// the currently largest cluster.
pub fn kmeans<S: Scalar>(points: &[Vec<S>], k: usize, max_iter: usize, seed: u64) -> Result<Clustering<S>> {
    if points.is_empty() {
        return Err(Error::input("k-means needs at least one point"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::input(format!("k = {k} must be in 1..={}", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::shape(format!("points of dimension {dim}"), "ragged input"));
    }

    let mut rng = seeding::rng_for(&[seed, seeding::TAG_KMEANS]);
    let mut centroids = plus_plus_seeding(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut inertia_history = Vec::new();

    for _ in 0..max_iter.max(1) {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;

        let mut sizes = vec![0usize; k];
        for &a in &assignments {
            sizes[a] += 1;
        }
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            let largest = (0..k).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).expect("k >= 1");
            let far = (0..points.len())
                .filter(|&i| assignments[i] == largest)
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &centroids[largest])
                        .partial_cmp(&sq_dist(&points[b], &centroids[largest]))
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(b.cmp(&a))
                })
                .expect("largest cluster is non-empty");
            assignments[far] = empty;
            sizes[largest] -= 1;
            sizes[empty] += 1;
        }

        for (c, centroid) in centroids.iter_mut().enumerate() {
            centroid.iter_mut().for_each(|v| *v = S::zero());
            for (p, _) in points.iter().zip(&assignments).filter(|(_, &a)| a == c) {
                for (v, &x) in centroid.iter_mut().zip(p) {
                    *v += x;
                }
            }
            let n = S::from_count(sizes[c]);
            centroid.iter_mut().for_each(|v| *v /= n);
        }
        inertia_history.push(inertia(points, &assignments, &centroids));
    }

    let inertia = inertia(points, &assignments, &centroids);
    Ok(Clustering {
        clients: (0..points.len() as u32).map(ClientId).collect(),
        assignments,
        centroids,
        inertia,
        inertia_history,
    })
}

fn inertia<S: Scalar>(points: &[Vec<S>], assignments: &[usize], centroids: &[Vec<S>]) -> S {
    points
        .iter()
        .zip(assignments)
        .fold(S::zero(), |acc, (p, &a)| acc + sq_dist(p, &centroids[a]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let c = kmeans(&pts, 6, 20, 3).unwrap();
        assert_eq!(c.inertia, 0.0);
        let mut a = c.assignments.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn rejects_bad_k() {
        let pts = vec![vec![0.0f64]; 3];
        assert!(kmeans(&pts, 4, 10, 0).is_err());
        assert!(kmeans(&pts, 0, 10, 0).is_err());
        assert!(kmeans::<f64>(&[], 1, 10, 0).is_err());
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let pts = vec![vec![1.0f32, 1.0]; 5];
        let c = kmeans(&pts, 3, 10, 0).unwrap();
        assert_eq!(c.inertia, 0.0);
        assert!(c.sizes().iter().all(|&s| s > 0));
    }
}
