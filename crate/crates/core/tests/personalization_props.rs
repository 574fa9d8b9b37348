use fedsr_core::personalization::{blend, fine_tune, interpolate, FineTune};
use fedsr_core::seeding::{rng_for, TAG_FINE_TUNE};
use fedsr_core::seqmodel::{sequence_loss_and_grad, training_targets, Params, Target};
use fedsr_core::tensor::Matrix;
use proptest::prelude::*;
use rand::{Rng, RngCore};

fn random_params(seed: u64, items: usize, dim: usize) -> Params<f64> {
    let mut rng = rng_for(&[seed, 99]);
    let mut p = Params::zeros(items, dim);
    for block in p.slices_mut() {
        block.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
    }
    p
}

#[test]
fn one_step_equals_hand_sgd_update() {
    let local = random_params(1, 12, 4);
    let global = random_params(2, 12, 4).embedding;
    let train = [3, 1, 4, 1, 5];
    let settings = FineTune { lr: 0.1, steps: 1, dropout: 0.3, num_negatives: 5, max_seq_len: 50 };
    let tuned = fine_tune(&global, &local, &train, &settings, 9).unwrap();

    let mut start = local.clone();
    start.embedding = global.clone();
    let mut rng = rng_for(&[9, TAG_FINE_TUNE]);
    let (inputs, targets) = training_targets(&train, 12, 5, &mut rng);
    let (_, g) = sequence_loss_and_grad(&start, inputs, &targets, 0.3, rng.next_u64()).unwrap();
    let mut expect = start.clone();
    expect.axpy(&g, -0.1).unwrap();
    assert_eq!(tuned, expect);
}

#[test]
fn small_steps_decrease_the_loss() {
    for seed in 0..10 {
        let local = random_params(seed, 15, 6);
        let global = random_params(seed + 100, 15, 6).embedding;
        let mut rng = rng_for(&[seed, 5]);
        let train: Vec<u32> = (0..8).map(|_| rng.gen_range(0..15)).collect();
        // with the full catalog as negatives the sampled loss is the exact objective
        let settings = FineTune { lr: 1e-3, steps: 1, dropout: 0.0, num_negatives: 14, max_seq_len: 50 };
        let targets: Vec<Target> = (0..7)
            .map(|position| Target {
                position,
                item: train[position + 1],
                negatives: (0..15).filter(|&i| i != train[position + 1]).collect(),
            })
            .collect();
        let mut before = local.clone();
        before.embedding = global.clone();
        let loss = |p: &Params<f64>| sequence_loss_and_grad(p, &train[..7], &targets, 0.0, 0).unwrap().0;
        let tuned = fine_tune(&global, &local, &train, &settings, seed).unwrap();
        assert!(loss(&tuned) <= loss(&before), "seed {seed}");
    }
}

#[test]
fn inputs_are_left_untouched() {
    let local = random_params(3, 10, 3);
    let global = random_params(4, 10, 3).embedding;
    let (l0, g0) = (local.clone(), global.clone());
    let _ = fine_tune(&global, &local, &[1, 2, 3], &FineTune { lr: 0.5, ..FineTune::default() }, 0).unwrap();
    assert_eq!((local, global), (l0, g0));
}

proptest! {
    #[test]
    fn interpolation_is_convex(gamma in 0.0..=1.0f64, seed in any::<u64>()) {
        let local = random_params(seed, 6, 3);
        let global = random_params(seed ^ 1, 6, 3).embedding;
        let out = interpolate(&local, &global, gamma).unwrap();
        for ((&o, &l), &g) in out.embedding.as_slice().iter().zip(local.embedding.as_slice()).zip(global.as_slice()) {
            prop_assert!(o >= l.min(g) - 1e-15 && o <= l.max(g) + 1e-15);
        }
        prop_assert_eq!(&out.input_weights, &local.input_weights);
        prop_assert_eq!(&out.recurrent_weights, &local.recurrent_weights);
        prop_assert_eq!(&out.biases, &local.biases);
    }

    #[test]
    fn interpolation_composes_affinely(g1 in 0.0..=1.0f64, g2 in 0.0..=1.0f64, l in -5.0..5.0f64, w in -5.0..5.0f64) {
        let (lm, wm) = (Matrix::from_vec(1, 1, vec![l]).unwrap(), Matrix::from_vec(1, 1, vec![w]).unwrap());
        let twice = blend(&blend(&lm, &wm, g1).unwrap(), &wm, g2).unwrap();
        let once = blend(&lm, &wm, g1 * g2).unwrap();
        prop_assert!((twice.as_slice()[0] - once.as_slice()[0]).abs() < 1e-12);
    }
}
