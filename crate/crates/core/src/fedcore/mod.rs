//! Round loop for CF-FedSR, its ablations, FedAvg and the centralized
//! baseline.
//!
//! A round runs eligibility filtering, clustering and sampling, broadcast of
//! the global embedding, local Adam training, validation scoring, upload and
//! aggregation. Only the embedding table, `n_k` and `p_k` leave a client.

mod central;
mod config;
mod engine;
mod result;

pub use central::run_central;
pub use config::{AggregatorKind, Algorithm, RunConfig};
pub use engine::{evaluate, run_experiment, ClientState, Federation, Message, ServerState};
pub use result::{ExperimentResult, RoundReport, Summary};
