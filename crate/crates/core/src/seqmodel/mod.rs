//! GRU session recommender with tied item embeddings.
//!
//! Scores are `hidden · embedding[item]`, so the hidden size always equals the
//! embedding width and the embedding table is both the input lookup and the
//! output layer.

mod gru;
mod optim;
mod params;

pub use gru::{forward, loss_and_grad, score, sequence_loss_and_grad, training_targets, Target};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use params::{Gate, Params};

/// Dense item index, `0..num_items`.
pub type ItemId = u32;

/// Training sequences are cut to this many most recent items.
pub const DEFAULT_MAX_SEQ_LEN: usize = 50;

/// Most recent `max_len` items of `seq`.
pub fn truncate_recent(seq: &[ItemId], max_len: usize) -> &[ItemId] {
    &seq[seq.len().saturating_sub(max_len)..]
}
