use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregation::FairnessParams;
use crate::error::{Error, Result};
use crate::personalization::FineTune;
use crate::selection::Eligibility;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    CfFedsr,
    Fedavg,
    Central,
    /// Without client selection and clustered sampling.
    Variation1,
    /// Without fairness-aware aggregation.
    Variation2,
    /// Without personalization.
    Variation3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::CfFedsr,
        Algorithm::Fedavg,
        Algorithm::Central,
        Algorithm::Variation1,
        Algorithm::Variation2,
        Algorithm::Variation3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CfFedsr => "cf_fedsr",
            Algorithm::Fedavg => "fedavg",
            Algorithm::Central => "central",
            Algorithm::Variation1 => "variation1",
            Algorithm::Variation2 => "variation2",
            Algorithm::Variation3 => "variation3",
        }
    }

    /// Eligibility gate plus cluster-proportional sampling.
    pub fn uses_selection(self) -> bool {
        matches!(self, Algorithm::CfFedsr | Algorithm::Variation2 | Algorithm::Variation3)
    }

    pub fn default_aggregator(self) -> AggregatorKind {
        match self {
            Algorithm::Fedavg | Algorithm::Variation2 | Algorithm::Central => AggregatorKind::FedAvg,
            Algorithm::CfFedsr | Algorithm::Variation1 | Algorithm::Variation3 => AggregatorKind::Fair,
        }
    }

    pub fn personalizes(self) -> bool {
        matches!(self, Algorithm::CfFedsr | Algorithm::Variation1 | Algorithm::Variation2)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    FedAvg,
    Fair,
}

impl FromStr for AggregatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fedavg" => Ok(AggregatorKind::FedAvg),
            "fair" => Ok(AggregatorKind::Fair),
            _ => Err(Error::config(format!("unknown aggregator {s:?}"))),
        }
    }
}

/// Everything that determines a run, apart from the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub clients_per_round: usize,
    /// Federated rounds (the centralized baseline runs this many epochs).
    pub total_rounds: usize,
    /// Adam updates per participant per round.
    pub local_epochs: usize,
    pub lr: f64,
    pub dropout: f64,
    /// Embedding width, also the GRU hidden size.
    pub embedding_dim: usize,
    pub num_clusters: usize,
    pub lambda1: usize,
    pub lambda2: usize,
    pub v1: usize,
    pub v2: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ft_steps: usize,
    pub ft_lr: f64,
    /// Overrides the algorithm's own aggregator when set.
    pub aggregator: Option<AggregatorKind>,
    /// Blend the raw performance and size shares instead of the activated ones.
    pub literal_normalization: bool,
    pub interpolate_each_round: bool,
    pub reset_optimizer_each_round: bool,
    /// 0: early stopping watches participants' validation HR@10 every round.
    /// n > 0: every n-th round all clients are evaluated instead.
    pub full_eval_every: usize,
    pub patience: usize,
    pub kmeans_max_iter: usize,
    pub max_seq_len: usize,
    /// Sampled negatives per training position.
    pub train_negatives: usize,
    pub parallel: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::CfFedsr,
            clients_per_round: 128,
            total_rounds: 200,
            local_epochs: 1,
            lr: 0.001,
            dropout: 0.3,
            embedding_dim: 50,
            num_clusters: 5,
            lambda1: 20,
            lambda2: 10,
            v1: 3,
            v2: 10,
            alpha: 0.5,
            beta: 0.5,
            gamma: 0.5,
            ft_steps: 2,
            ft_lr: 0.001,
            aggregator: None,
            literal_normalization: false,
            interpolate_each_round: false,
            reset_optimizer_each_round: false,
            full_eval_every: 0,
            patience: 5,
            kmeans_max_iter: 50,
            max_seq_len: crate::seqmodel::DEFAULT_MAX_SEQ_LEN,
            train_negatives: 100,
            parallel: true,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("clients_per_round", self.clients_per_round),
            ("local_epochs", self.local_epochs),
            ("d", self.embedding_dim),
            ("k", self.num_clusters),
            ("v1", self.v1),
            ("ft_steps", self.ft_steps),
            ("patience", self.patience),
            ("kmeans_max_iter", self.kmeans_max_iter),
            ("max_seq_len", self.max_seq_len),
            ("train_negatives", self.train_negatives),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(format!("{key} must be positive")));
            }
        }
        if self.v2 <= self.v1 {
            return Err(Error::config(format!("v2 ({}) must exceed v1 ({})", self.v2, self.v1)));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::config("lr must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout must be in [0, 1)"));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta > 0.0) {
            return Err(Error::config("alpha and beta must be >= 0 with a positive sum"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must be in [0, 1]"));
        }
        if self.ft_lr.is_nan() || self.ft_lr < 0.0 {
            return Err(Error::config("ft_lr must be >= 0"));
        }
        Ok(())
    }

    pub fn aggregator_kind(&self) -> AggregatorKind {
        self.aggregator.unwrap_or_else(|| self.algorithm.default_aggregator())
    }

    pub fn eligibility(&self) -> Eligibility {
        Eligibility {
            min_samples: self.lambda1,
            warmup_rounds: self.lambda2,
        }
    }

    pub fn fairness(&self) -> FairnessParams {
        FairnessParams {
            alpha: self.alpha,
            beta: self.beta,
            literal_normalization: self.literal_normalization,
        }
    }

    pub fn fine_tune(&self) -> FineTune {
        FineTune {
            lr: self.ft_lr,
            steps: self.ft_steps,
            dropout: self.dropout,
            num_negatives: self.train_negatives,
            max_seq_len: self.max_seq_len,
        }
    }
}
