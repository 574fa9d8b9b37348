use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use crate::dataio::ClientId;
use crate::metrics::{bytes_transmitted, EvalOutcome, MetricMeans};

/// What the server records about one round. Contains no item ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    /// 1-based.
    pub round: usize,
    pub eligible: usize,
    pub participants: Vec<ClientId>,
    pub weights: Vec<(ClientId, f64)>,
    /// Participants' validation outcomes after local training.
    pub outcomes: Vec<EvalOutcome>,
    pub means: MetricMeans,
    pub fairness_variance: f64,
    /// Entries in the transmitted embedding table; 0 when nothing is sent.
    pub embedding_entries: usize,
    pub cumulative_bytes: u64,
    /// Early-stopping signal recorded for this round, if evaluated.
    pub validation_hr10: Option<f64>,
    pub warning: Option<String>,
}

impl RoundReport {
    pub fn bytes(&self) -> u64 {
        bytes_transmitted(self.participants.len(), self.embedding_entries)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Test metrics averaged over all clients.
    pub means: MetricMeans,
    pub fairness_variance: f64,
    /// Round at which validation stopped improving for `patience` evaluations.
    pub convergence_round: Option<usize>,
    pub rounds_executed: usize,
    pub early_stopped: bool,
    pub total_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub rounds: Vec<RoundReport>,
    /// `(round, value)` pairs watched by early stopping.
    pub history: Vec<(usize, f64)>,
    pub test_outcomes: Vec<EvalOutcome>,
    pub summary: Summary,
}
