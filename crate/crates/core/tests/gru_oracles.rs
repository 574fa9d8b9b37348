//! Independent reference computations for the recommender's forward pass and
//! gradients: a nested-loop GRU and central finite differences.

use fedsr_core::seqmodel::{forward, loss_and_grad, score, sequence_loss_and_grad, Params, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain nested-loop GRU, written directly from the recurrence
/// z = σ(Wz x + Uz h + bz), r = σ(Wr x + Ur h + br),
/// n = tanh(Wn x + Un (r∘h) + bn), h' = (1-z)∘n + z∘h.
fn reference_hidden(p: &Params<f64>, seq: &[u32]) -> Vec<f64> {
    let d = p.dim();
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let mut h = vec![0.0; d];
    for &item in seq {
        let x: Vec<f64> = (0..d).map(|j| p.embedding.get(item as usize, j)).collect();
        let mut z = vec![0.0; d];
        let mut r = vec![0.0; d];
        for i in 0..d {
            let mut az = p.biases[0][i];
            let mut ar = p.biases[1][i];
            for j in 0..d {
                az += p.input_weights[0].get(i, j) * x[j] + p.recurrent_weights[0].get(i, j) * h[j];
                ar += p.input_weights[1].get(i, j) * x[j] + p.recurrent_weights[1].get(i, j) * h[j];
            }
            z[i] = sig(az);
            r[i] = sig(ar);
        }
        let mut next = vec![0.0; d];
        for i in 0..d {
            let mut an = p.biases[2][i];
            for j in 0..d {
                an += p.input_weights[2].get(i, j) * x[j] + p.recurrent_weights[2].get(i, j) * r[j] * h[j];
            }
            next[i] = (1.0 - z[i]) * an.tanh() + z[i] * h[i];
        }
        h = next;
    }
    h
}

fn random_params(rng: &mut ChaCha8Rng, items: usize, d: usize, scale: f64) -> Params<f64> {
    let mut p = Params::<f64>::zeros(items, d);
    for block in p.slices_mut() {
        for v in block.iter_mut() {
            *v = rng.gen_range(-scale..=scale);
        }
    }
    p
}

fn reference_loss(p: &Params<f64>, seq: &[u32], target: u32, negatives: &[u32]) -> f64 {
    let h = reference_hidden(p, seq);
    let s = |c: u32| (0..p.dim()).map(|j| h[j] * p.embedding.get(c as usize, j)).sum::<f64>();
    let st = s(target);
    let lse = std::iter::once(st)
        .chain(negatives.iter().map(|&c| s(c)))
        .map(f64::exp)
        .sum::<f64>()
        .ln();
    lse - st
}

#[test]
fn forward_matches_loop_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let d = rng.gen_range(1..=8);
        let p = random_params(&mut rng, 12, d, 0.8);
        let seq: Vec<u32> = (0..5).map(|_| rng.gen_range(0..12)).collect();
        let got = forward(&p, &seq, 0.0, 0).unwrap();
        let want = reference_hidden(&p, &seq);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }
}

#[test]
fn score_matches_dot_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_params(&mut rng, 30, 6, 1.0);
    let hidden: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cands = [0u32, 29, 4, 4, 17];
    let got = score(&p, &hidden, &cands).unwrap();
    for (g, &c) in got.iter().zip(&cands) {
        let want: f64 = hidden.iter().enumerate().map(|(j, h)| h * p.embedding.get(c as usize, j)).sum();
        assert!((g - want).abs() < 1e-14);
    }
}

#[test]
fn loss_matches_reference_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_params(&mut rng, 20, 5, 0.5);
    let (loss, _) = loss_and_grad(&p, &[1, 2, 3], 4, &[5, 6, 7, 8], 0.0, 0).unwrap();
    assert!((loss - reference_loss(&p, &[1, 2, 3], 4, &[5, 6, 7, 8])).abs() < 1e-13);
}

/// Checks every gradient component of `loss_and_grad` against central
/// differences with step 1e-5, relative tolerance 1e-4 and absolute floor 1e-8.
pub fn gradient_check_instance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(1..=16);
    let items = rng.gen_range(d.max(6)..=24);
    let p = random_params(&mut rng, items, d, 0.1);
    let len = rng.gen_range(1..=8);
    let seq: Vec<u32> = (0..len).map(|_| rng.gen_range(0..items as u32)).collect();
    let target = rng.gen_range(0..items as u32);
    let negatives: Vec<u32> = (0..items as u32).filter(|&i| i != target).take(5).collect();

    let (_, grads) = loss_and_grad(&p, &seq, target, &negatives, 0.0, 0).map_err(|e| e.to_string())?;
    let step = 1e-5;
    let mut probe = p.clone();
    for b in 0..10 {
        for i in 0..p.slices()[b].len() {
            let orig = p.slices()[b][i];
            probe.slices_mut()[b][i] = orig + step;
            let up = reference_loss(&probe, &seq, target, &negatives);
            probe.slices_mut()[b][i] = orig - step;
            let down = reference_loss(&probe, &seq, target, &negatives);
            probe.slices_mut()[b][i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads.slices()[b][i];
            let err = (numeric - analytic).abs();
            if err > 1e-8 && err > 1e-4 * numeric.abs().max(analytic.abs()) {
                return Err(format!(
                    "seed {seed}: block {b} entry {i}: analytic {analytic:e} vs numeric {numeric:e}"
                ));
            }
        }
    }
    Ok(())
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..10 {
        gradient_check_instance(seed).unwrap();
    }
}

#[test]
fn multi_position_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let p = random_params(&mut rng, 15, 4, 0.3);
    let seq = [3u32, 7, 7, 1, 0];
    let targets = vec![
        Target { position: 1, item: 2, negatives: vec![4, 5, 6] },
        Target { position: 4, item: 9, negatives: vec![3, 14] },
    ];
    let total = |q: &Params<f64>| {
        (reference_loss(q, &seq[..2], 2, &[4, 5, 6]) + reference_loss(q, &seq, 9, &[3, 14])) / 2.0
    };
    let (loss, grads) = sequence_loss_and_grad(&p, &seq, &targets, 0.0, 0).unwrap();
    assert!((loss - total(&p)).abs() < 1e-13);
    let mut probe = p.clone();
    for b in 0..10 {
        for i in 0..p.slices()[b].len() {
            let orig = p.slices()[b][i];
            probe.slices_mut()[b][i] = orig + 1e-5;
            let up = total(&probe);
            probe.slices_mut()[b][i] = orig - 1e-5;
            let down = total(&probe);
            probe.slices_mut()[b][i] = orig;
            let numeric = (up - down) / 2e-5;
            let analytic = grads.slices()[b][i];
            let err = (numeric - analytic).abs();
            assert!(err <= 1e-8 || err <= 1e-4 * numeric.abs().max(analytic.abs()));
        }
    }
}

#[test]
fn dropout_gradient_matches_finite_differences_of_same_mask() {
    // With a fixed seed the mask is fixed, so the loss is a smooth function of the params.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = random_params(&mut rng, 10, 3, 0.4);
    let seq = [1u32, 2, 3, 1];
    let f = |q: &Params<f64>| loss_and_grad(q, &seq, 5, &[6, 7, 8], 0.3, 1234).unwrap().0;
    let (_, grads) = loss_and_grad(&p, &seq, 5, &[6, 7, 8], 0.3, 1234).unwrap();
    let mut probe = p.clone();
    for b in 0..10 {
        for i in 0..p.slices()[b].len() {
            let orig = p.slices()[b][i];
            probe.slices_mut()[b][i] = orig + 1e-5;
            let up = f(&probe);
            probe.slices_mut()[b][i] = orig - 1e-5;
            let down = f(&probe);
            probe.slices_mut()[b][i] = orig;
            let numeric = (up - down) / 2e-5;
            let analytic = grads.slices()[b][i];
            let err = (numeric - analytic).abs();
            assert!(err <= 1e-8 || err <= 1e-4 * numeric.abs().max(analytic.abs()), "{b}/{i}");
        }
    }
}

#[test]
fn large_inputs_stay_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = random_params(&mut rng, 40, 8, 10.0);
    let negatives: Vec<u32> = (1..40).collect();
    let (loss, grads) = loss_and_grad(&p, &[3, 9, 12, 3, 30], 0, &negatives, 0.0, 0).unwrap();
    assert!(loss.is_finite() && loss >= 0.0);
    assert!(grads.is_finite());
}
