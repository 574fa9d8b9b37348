use super::config::RunConfig;
use super::engine::{check_datasets, early_stop_round, finish, local_step, test_outcome, training_rng, validation_outcome};
use super::result::{ExperimentResult, RoundReport};
use crate::dataio::ClientDataset;
use crate::error::Result;
use crate::metrics::{fairness_variance, EvalOutcome, MetricMeans};
use crate::seqmodel::{OptimizerState, Params};

/// Trains a single model on the pooled data. Each round visits every client
/// in id order, drawing the same random streams a federated client would.
pub fn run_central(config: &RunConfig, datasets: &[ClientDataset], num_items: usize) -> Result<ExperimentResult> {
    config.validate()?;
    check_datasets(datasets, num_items)?;
    let mut clients: Vec<&ClientDataset> = datasets.iter().collect();
    clients.sort_by_key(|d| d.id);

    let mut model = Params::<f64>::init(num_items, config.embedding_dim, config.seed)?;
    let mut optimizer = OptimizerState::new(&model);
    let mut rounds = Vec::new();
    let mut history = Vec::new();

    for round in 1..=config.total_rounds {
        let mut rngs: Vec<_> = clients.iter().map(|d| training_rng(config, round, d.id)).collect();
        let mut active = vec![true; clients.len()];
        for _ in 0..config.local_epochs {
            for ((d, rng), live) in clients.iter().zip(&mut rngs).zip(&mut active) {
                if *live {
                    *live = local_step(&mut model, &mut optimizer, &d.train, config, rng)?;
                }
            }
        }

        let outcomes = clients
            .iter()
            .map(|d| validation_outcome(&model, d, config))
            .collect::<Result<Vec<_>>>()?;
        let scores: Vec<f64> = outcomes.iter().map(EvalOutcome::performance).collect();
        let means = MetricMeans::of(&outcomes);
        history.push((round, means.hr10));
        rounds.push(RoundReport {
            round,
            eligible: clients.len(),
            participants: clients.iter().map(|d| d.id).collect(),
            weights: Vec::new(),
            fairness_variance: fairness_variance(&scores)?,
            outcomes,
            means,
            embedding_entries: 0,
            cumulative_bytes: 0,
            validation_hr10: Some(means.hr10),
            warning: None,
        });
        if early_stop_round(&history, config.patience).is_some() {
            break;
        }
    }

    let test = clients
        .iter()
        .map(|d| test_outcome(&model, d, config))
        .collect::<Result<Vec<_>>>()?;
    finish(config, rounds, history, test)
}
