use fedsr_core::dataio::ClientId;
use fedsr_core::selection::{apportion, eligible, kmeans, proportional_sample, represent};
use fedsr_core::tensor::Matrix;
use proptest::prelude::*;

fn points(max_n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, dim), 1..max_n)
}

fn inertia(points: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&Vec<f64>> = points.iter().zip(assignment).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
        if members.is_empty() {
            continue;
        }
        let mean: Vec<f64> = (0..dim).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
        total += members.iter().map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum::<f64>();
    }
    total
}

proptest! {
    #[test]
    fn kmeans_inertia_never_increases(pts in points(40, 3), k in 1usize..6, seed in any::<u64>()) {
        let k = k.min(pts.len());
        let c = kmeans(&pts, k, 50, seed).unwrap();
        for w in c.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        prop_assert_eq!(c.k(), k);
        prop_assert!(c.sizes().iter().all(|&s| s > 0));
        prop_assert!((c.inertia - inertia(&pts, &c.assignments, k)).abs() < 1e-9);
        prop_assert_eq!(&c, &kmeans(&pts, k, 50, seed).unwrap());
    }

    #[test]
    fn kmeans_recovers_separated_groups(n1 in 1usize..10, n2 in 1usize..10, seed in any::<u64>(), jitter in prop::collection::vec(-0.5..0.5f64, 20)) {
        let mut pts = Vec::new();
        for i in 0..n1 {
            pts.push(vec![jitter[i], jitter[19 - i]]);
        }
        for i in 0..n2 {
            pts.push(vec![100.0 + jitter[10 + i], 100.0 - jitter[i]]);
        }
        let c = kmeans(&pts, 2, 50, seed).unwrap();
        let first = c.assignments[0];
        prop_assert!(c.assignments[..n1].iter().all(|&a| a == first));
        prop_assert!(c.assignments[n1..].iter().all(|&a| a != first));
    }

    #[test]
    fn kmeans_two_clusters_matches_brute_force_on_separated_data(pts in points(8, 2), seed in any::<u64>()) {
        prop_assume!(pts.len() >= 2);
        // stretch the first coordinate so the optimal split is unambiguous
        let pts: Vec<Vec<f64>> = pts.iter().enumerate().map(|(i, p)| vec![p[0] + if i % 2 == 0 { 0.0 } else { 1e3 }, p[1]]).collect();
        let n = pts.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let a: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            best = best.min(inertia(&pts, &a, 2));
        }
        let c = kmeans(&pts, 2, 100, seed).unwrap();
        prop_assert!((c.inertia - best).abs() <= 1e-9 * best.max(1.0));
    }

    #[test]
    fn apportion_is_largest_remainder(sizes in prop::collection::vec(0usize..40, 1..8), budget in 0usize..200) {
        let q = apportion(&sizes, budget);
        let total: usize = sizes.iter().sum();
        prop_assert_eq!(q.iter().sum::<usize>(), budget.min(total));
        for (&s, &qi) in sizes.iter().zip(&q) {
            prop_assert!(qi <= s);
            if total > 0 {
                let exact = budget.min(total) as f64 * s as f64 / total as f64;
                prop_assert!((qi as f64 - exact).abs() < 1.0);
            }
        }
    }

    #[test]
    fn proportional_sample_invariants(pts in points(30, 2), k in 1usize..5, budget in 1usize..40, seed in any::<u64>()) {
        let k = k.min(pts.len());
        let mut c = kmeans(&pts, k, 20, seed).unwrap();
        c.clients = (0..pts.len() as u32).map(|i| ClientId(i * 3 + 1)).collect();
        let picked = proportional_sample(&c, budget, seed).unwrap();
        prop_assert_eq!(picked.len(), budget.min(pts.len()));
        prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(picked.iter().all(|p| c.clients.contains(p)));
        prop_assert_eq!(&picked, &proportional_sample(&c, budget, seed).unwrap());
        let quotas = apportion(&c.sizes(), budget);
        for (group, q) in c.members().iter().zip(quotas) {
            prop_assert_eq!(group.iter().filter(|m| picked.contains(m)).count(), q);
        }
    }

    #[test]
    fn eligibility_is_monotone(n in 0usize..100, t in 0usize..50, l1 in 1usize..50, l2 in 1usize..30) {
        if eligible(n, t, l1, l2) {
            prop_assert!(eligible(n + 1, t, l1, l2));
            prop_assert!(eligible(n, t + 1, l1, l2));
        }
        prop_assert_eq!(eligible(n, t, l1, l2), n >= l1 || t >= l2);
    }

    #[test]
    fn representation_is_mean_of_recent_rows(seq in prop::collection::vec(0u32..6, 1..20), v1 in 1usize..5, extra in 1usize..8) {
        let v2 = v1 + extra;
        let emb = Matrix::from_fn(6, 2, |r, c| (r * 10 + c) as f64);
        let rep = represent(ClientId(0), &seq, &emb, v1, v2).unwrap();
        for (offset, v) in [(0, v1), (2, v2)] {
            let tail = &seq[seq.len().saturating_sub(v)..];
            for c in 0..2 {
                let mean = tail.iter().map(|&i| (i as usize * 10 + c) as f64).sum::<f64>() / tail.len() as f64;
                prop_assert!((rep.vector[offset + c] - mean).abs() < 1e-12);
            }
        }
    }
}
