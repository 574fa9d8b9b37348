//! Local fine-tuning of the global model and local/global interpolation.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding;
use crate::seqmodel::{
    optimizer_step, sequence_loss_and_grad, training_targets, truncate_recent, ItemId, OptimizerKind, OptimizerState,
    Params,
};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FineTune {
    /// SGD step size.
    pub lr: f64,
    /// Full passes over the training sequence, one update each.
    pub steps: usize,
    pub dropout: f64,
    pub num_negatives: usize,
    pub max_seq_len: usize,
}

impl Default for FineTune {
    fn default() -> Self {
        Self {
            lr: 0.001,
            steps: 2,
            dropout: 0.3,
            num_negatives: 100,
            max_seq_len: crate::seqmodel::DEFAULT_MAX_SEQ_LEN,
        }
    }
}

/// Starts from `local` with its embedding replaced by `global_embedding` and
/// takes `steps` plain gradient steps on the client's training sequence.
pub fn fine_tune<S: Scalar>(
    global_embedding: &Matrix<S>,
    local: &Params<S>,
    train: &[ItemId],
    settings: &FineTune,
    seed: u64,
) -> Result<Params<S>> {
    if settings.lr.is_nan() || settings.lr < 0.0 {
        return Err(Error::config(format!("fine-tune lr must be >= 0, got {}", settings.lr)));
    }
    if settings.steps == 0 {
        return Err(Error::config("fine-tune steps must be at least 1"));
    }
    if global_embedding.shape() != local.embedding.shape() {
        return Err(Error::shape(
            format!("{:?}", local.embedding.shape()),
            format!("{:?}", global_embedding.shape()),
        ));
    }
    let seq = truncate_recent(train, settings.max_seq_len);
    if seq.len() < 2 {
        return Err(Error::input("fine-tuning needs at least two training items"));
    }

    let mut params = local.clone();
    params.embedding = global_embedding.clone();
    if settings.lr == 0.0 {
        return Ok(params);
    }
    let mut rng = seeding::rng_for(&[seed, seeding::TAG_FINE_TUNE]);
    let mut state = OptimizerState::new(&params);
    for _ in 0..settings.steps {
        let (inputs, targets) = training_targets(seq, params.num_items(), settings.num_negatives, &mut rng);
        let (_, grads) = sequence_loss_and_grad(&params, inputs, &targets, settings.dropout, rng.next_u64())?;
        optimizer_step(&mut params, &grads, &mut state, settings.lr, OptimizerKind::Sgd)?;
    }
    Ok(params)
}

/// `γ·local + (1−γ)·global` on the embedding; every other parameter is
/// taken from `local` unchanged.
pub fn interpolate<S: Scalar>(local: &Params<S>, global_embedding: &Matrix<S>, gamma: f64) -> Result<Params<S>> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(format!("gamma {gamma} outside [0, 1]")));
    }
    let mut out = local.clone();
    out.embedding = blend(&local.embedding, global_embedding, gamma)?;
    Ok(out)
}

/// `γ·local + (1−γ)·global`, elementwise.
pub fn blend<S: Scalar>(local: &Matrix<S>, global: &Matrix<S>, gamma: f64) -> Result<Matrix<S>> {
    if local.shape() != global.shape() {
        return Err(Error::shape(format!("{:?}", local.shape()), format!("{:?}", global.shape())));
    }
    let g = S::lit(gamma);
    let data = local
        .as_slice()
        .iter()
        .zip(global.as_slice())
        .map(|(&l, &w)| g * l + (S::one() - g) * w)
        .collect();
    Matrix::from_vec(local.rows(), local.cols(), data)
}
