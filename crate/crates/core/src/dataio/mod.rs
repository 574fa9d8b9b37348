//! Interaction logs, per-user client datasets and the synthetic generator.

mod log;
mod split;
mod synthetic;

pub use log::{load_interactions, parse_interactions, write_interactions, Interaction, InteractionLog};
pub use split::{build_clients, ClientDataset, ClientId, NUM_EVAL_NEGATIVES};
pub use synthetic::{generate_synthetic, SyntheticConfig};
