use rand::seq::index;
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{AggregatorKind, RunConfig};
use super::result::{ExperimentResult, RoundReport, Summary};
use crate::aggregation::{aggregate, fairness_weights, fedavg_weights, ClientUpdate};
use crate::dataio::{ClientDataset, ClientId};
use crate::error::{Error, Result};
use crate::metrics::{convergence_round, fairness_variance, rank_of_target, EvalOutcome, FairnessReport, MetricMeans};
use crate::personalization::{blend, fine_tune, interpolate};
use crate::seeding::{self, Rng};
use crate::selection::{kmeans, proportional_sample, represent, ClientRepresentation};
use crate::seqmodel::{
    forward, optimizer_step, score, sequence_loss_and_grad, training_targets, truncate_recent, ItemId, OptimizerKind,
    OptimizerState, Params,
};
use crate::tensor::Matrix;

/// A simulated device: private data plus its local model.
#[derive(Clone, Debug)]
pub struct ClientState {
    pub data: ClientDataset,
    pub params: Params<f64>,
    pub optimizer: OptimizerState<f64>,
    pub rounds_participated: usize,
    /// Global rounds elapsed, the `t_i` of the eligibility gate.
    pub rounds_elapsed: usize,
    pub last_p: f64,
}

#[derive(Clone, Debug)]
pub struct ServerState {
    pub global_embedding: Matrix<f64>,
    /// Rounds completed.
    pub round: usize,
    pub history: Vec<(usize, f64)>,
    pub root_seed: u64,
}

/// Anything that crosses the client/server boundary.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    Broadcast {
        round: usize,
        client: ClientId,
        embedding: Matrix<f64>,
    },
    Upload {
        round: usize,
        update: ClientUpdate<f64>,
    },
    /// Computed server-side in the simulator; a deployment would need the
    /// client to upload it.
    Representation {
        round: usize,
        representation: ClientRepresentation<f64>,
    },
}

/// Ranks `target` against `negatives` using the final hidden state of
/// `context` (cut to the last `max_seq_len` items), without dropout.
pub fn evaluate(
    params: &Params<f64>,
    client: ClientId,
    context: &[ItemId],
    target: ItemId,
    negatives: &[ItemId],
    max_seq_len: usize,
) -> Result<EvalOutcome> {
    let hidden = forward(params, truncate_recent(context, max_seq_len), 0.0, 0)?;
    let candidates: Vec<ItemId> = std::iter::once(target).chain(negatives.iter().copied()).collect();
    let scores = score(params, &hidden, &candidates)?;
    Ok(EvalOutcome::from_rank(client, rank_of_target(&scores, 0)?))
}

pub(crate) fn validation_outcome(params: &Params<f64>, data: &ClientDataset, cfg: &RunConfig) -> Result<EvalOutcome> {
    evaluate(params, data.id, data.valid_context(), data.valid_target, &data.valid_negatives, cfg.max_seq_len)
}

pub(crate) fn test_outcome(params: &Params<f64>, data: &ClientDataset, cfg: &RunConfig) -> Result<EvalOutcome> {
    evaluate(params, data.id, &data.test_context(), data.test_target, &data.test_negatives, cfg.max_seq_len)
}

pub(crate) fn training_rng(cfg: &RunConfig, round: usize, client: ClientId) -> Rng {
    seeding::rng_for(&[cfg.seed, round as u64, client.0 as u64, seeding::TAG_TRAIN])
}

/// One Adam update over every next-item position of the client's training
/// sequence. Returns false when the sequence has no supervised position.
pub(crate) fn local_step(
    params: &mut Params<f64>,
    optimizer: &mut OptimizerState<f64>,
    train: &[ItemId],
    cfg: &RunConfig,
    rng: &mut Rng,
) -> Result<bool> {
    let seq = truncate_recent(train, cfg.max_seq_len);
    let (inputs, targets) = training_targets(seq, params.num_items(), cfg.train_negatives, rng);
    if targets.is_empty() {
        return Ok(false);
    }
    let (_, grads) = sequence_loss_and_grad(params, inputs, &targets, cfg.dropout, rng.next_u64())?;
    optimizer_step(params, &grads, optimizer, cfg.lr, OptimizerKind::Adam)?;
    Ok(true)
}

pub(crate) fn check_datasets(datasets: &[ClientDataset], num_items: usize) -> Result<()> {
    if datasets.is_empty() {
        return Err(Error::input("no clients"));
    }
    for d in datasets {
        if d.train.is_empty() {
            return Err(Error::input(format!("client {} has no training items", d.id)));
        }
        let all = d
            .train
            .iter()
            .chain([&d.valid_target, &d.test_target])
            .chain(&d.valid_negatives)
            .chain(&d.test_negatives);
        if let Some(bad) = all.into_iter().find(|&&i| i as usize >= num_items) {
            return Err(Error::input(format!("client {}: item {bad} outside catalog of {num_items}", d.id)));
        }
    }
    Ok(())
}

pub struct Federation {
    config: RunConfig,
    server: ServerState,
    clients: Vec<ClientState>,
    cumulative: u64,
    transcript: Option<Vec<Message>>,
}

impl Federation {
    /// Every client starts from the same initial model as the server.
    pub fn new(config: RunConfig, mut datasets: Vec<ClientDataset>, num_items: usize) -> Result<Self> {
        config.validate()?;
        check_datasets(&datasets, num_items)?;
        datasets.sort_by_key(|d| d.id);
        if datasets.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::input("duplicate client ids"));
        }
        let init = Params::<f64>::init(num_items, config.embedding_dim, config.seed)?;
        let clients = datasets
            .into_iter()
            .map(|data| ClientState {
                data,
                params: init.clone(),
                optimizer: OptimizerState::new(&init),
                rounds_participated: 0,
                rounds_elapsed: 0,
                last_p: 0.0,
            })
            .collect();
        Ok(Self {
            server: ServerState {
                global_embedding: init.embedding.clone(),
                round: 0,
                history: Vec::new(),
                root_seed: config.seed,
            },
            config,
            clients,
            cumulative: 0,
            transcript: None,
        })
    }

    /// Keep a copy of every cross-boundary message from now on.
    pub fn record_messages(&mut self) {
        self.transcript.get_or_insert_with(Vec::new);
    }

    pub fn transcript(&self) -> &[Message] {
        self.transcript.as_deref().unwrap_or(&[])
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn clients(&self) -> &[ClientState] {
        &self.clients
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    fn record(&mut self, msg: impl FnOnce() -> Message) {
        if let Some(t) = self.transcript.as_mut() {
            t.push(msg());
        }
    }

    fn choose_participants(&mut self, round: usize) -> Result<(usize, Vec<usize>)> {
        let cfg = &self.config;
        let use_selection = cfg.algorithm.uses_selection();
        let eligibility = cfg.eligibility();
        let candidates: Vec<usize> = (0..self.clients.len())
            .filter(|&i| {
                let c = &self.clients[i];
                !use_selection || eligibility.admits(c.data.n_k(), c.rounds_elapsed)
            })
            .collect();
        if candidates.is_empty() {
            return Ok((0, Vec::new()));
        }
        let budget = cfg.clients_per_round;

        if !use_selection {
            let mut rng = seeding::rng_for(&[cfg.seed, round as u64, seeding::TAG_SAMPLE]);
            let mut picked: Vec<usize> = index::sample(&mut rng, candidates.len(), budget.min(candidates.len()))
                .into_iter()
                .map(|i| candidates[i])
                .collect();
            picked.sort_unstable();
            return Ok((candidates.len(), picked));
        }

        let reps = candidates
            .iter()
            .map(|&i| {
                let c = &self.clients[i];
                represent(c.data.id, &c.data.train, &self.server.global_embedding, cfg.v1, cfg.v2)
            })
            .collect::<Result<Vec<_>>>()?;
        let points: Vec<Vec<f64>> = reps.iter().map(|r| r.vector.clone()).collect();
        let k = cfg.num_clusters.min(points.len());
        let round_seed = seeding::derive_seed(&[cfg.seed, round as u64]);
        let mut clustering = kmeans(&points, k, cfg.kmeans_max_iter, round_seed)?;
        clustering.clients = reps.iter().map(|r| r.client).collect();
        let chosen = proportional_sample(&clustering, budget, round_seed)?;
        for rep in reps {
            self.record(|| Message::Representation { round, representation: rep });
        }
        // clients are kept sorted by id
        let picked = chosen
            .into_iter()
            .map(|id| self.clients.binary_search_by_key(&id, |c| c.data.id).expect("sampled id exists"))
            .collect();
        Ok((candidates.len(), picked))
    }

    /// Runs one full round and advances every client's round counter.
    pub fn run_round(&mut self) -> Result<RoundReport> {
        let cfg = self.config.clone();
        let round = self.server.round + 1;
        let (eligible, picked) = self.choose_participants(round)?;
        let embedding_entries = self.server.global_embedding.len();
        let previous_bytes = self.cumulative_bytes();

        let mut report = RoundReport {
            round,
            eligible,
            participants: picked.iter().map(|&i| self.clients[i].data.id).collect(),
            weights: Vec::new(),
            outcomes: Vec::new(),
            means: MetricMeans::default(),
            fairness_variance: 0.0,
            embedding_entries,
            cumulative_bytes: previous_bytes,
            validation_hr10: None,
            warning: None,
        };

        if picked.is_empty() {
            report.warning = Some("no eligible clients; round skipped".into());
            log::warn!("round {round}: no eligible clients");
        } else {
            let personalize_rounds = cfg.interpolate_each_round && cfg.algorithm.personalizes();
            for &i in &picked {
                let global = &self.server.global_embedding;
                let c = &mut self.clients[i];
                c.params.embedding = if personalize_rounds && c.rounds_participated > 0 {
                    blend(&c.params.embedding, global, cfg.gamma)?
                } else {
                    global.clone()
                };
                let (id, emb) = (c.data.id, global.clone());
                self.record(|| Message::Broadcast { round, client: id, embedding: emb });
            }

            let mut flags = vec![false; self.clients.len()];
            picked.iter().for_each(|&i| flags[i] = true);
            let mut selected: Vec<&mut ClientState> = self
                .clients
                .iter_mut()
                .zip(&flags)
                .filter_map(|(c, &f)| f.then_some(c))
                .collect();
            let work = |c: &mut &mut ClientState| train_and_report(c, &cfg, round);
            let results: Vec<Result<(ClientUpdate<f64>, EvalOutcome)>> = if cfg.parallel {
                selected.par_iter_mut().map(work).collect()
            } else {
                selected.iter_mut().map(work).collect()
            };
            let (updates, outcomes): (Vec<_>, Vec<_>) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();

            let weights = match cfg.aggregator_kind() {
                AggregatorKind::FedAvg => fedavg_weights(&updates)?,
                AggregatorKind::Fair => fairness_weights(&updates, cfg.fairness())?,
            };
            self.server.global_embedding = aggregate(&updates, &weights)?;
            for u in updates {
                self.record(|| Message::Upload { round, update: u });
            }

            let scores: Vec<f64> = outcomes.iter().map(EvalOutcome::performance).collect();
            report.means = MetricMeans::of(&outcomes);
            report.fairness_variance = fairness_variance(&scores)?;
            report.weights = weights.entries;
            report.outcomes = outcomes;
            report.cumulative_bytes = previous_bytes + report.bytes();
            for &i in &picked {
                self.clients[i].rounds_participated += 1;
            }
        }

        report.validation_hr10 = if cfg.full_eval_every > 0 {
            round.is_multiple_of(cfg.full_eval_every)
                .then(|| self.validate_all().map(|o| MetricMeans::of(&o).hr10))
                .transpose()?
        } else {
            (!picked.is_empty()).then_some(report.means.hr10)
        };
        if let Some(v) = report.validation_hr10 {
            self.server.history.push((round, v));
        }

        for c in &mut self.clients {
            c.rounds_elapsed += 1;
        }
        self.server.round = round;
        self.cumulative = report.cumulative_bytes;
        Ok(report)
    }

    fn cumulative_bytes(&self) -> u64 {
        self.cumulative
    }

    /// Validation outcomes of every client, each using the current global
    /// embedding with its own recurrent weights.
    pub fn validate_all(&self) -> Result<Vec<EvalOutcome>> {
        self.map_clients(|c| {
            let mut model = c.params.clone();
            model.embedding = self.server.global_embedding.clone();
            validation_outcome(&model, &c.data, &self.config)
        })
    }

    /// Test outcomes for every client. When `personalize` is set, each
    /// client fine-tunes the global model locally and blends the result with
    /// the global embedding before ranking.
    pub fn test_all(&self, personalize: bool) -> Result<Vec<EvalOutcome>> {
        let cfg = &self.config;
        let global = &self.server.global_embedding;
        let ft = cfg.fine_tune();
        self.map_clients(|c| {
            let mut model = c.params.clone();
            model.embedding = global.clone();
            if personalize && c.data.train.len() >= 2 {
                let seed = seeding::derive_seed(&[cfg.seed, c.data.id.0 as u64]);
                let local = fine_tune(global, &c.params, &c.data.train, &ft, seed)?;
                model = interpolate(&local, global, cfg.gamma)?;
            }
            test_outcome(&model, &c.data, cfg)
        })
    }

    fn map_clients<F>(&self, f: F) -> Result<Vec<EvalOutcome>>
    where
        F: Fn(&ClientState) -> Result<EvalOutcome> + Sync + Send,
    {
        if self.config.parallel {
            self.clients.par_iter().map(f).collect()
        } else {
            self.clients.iter().map(f).collect()
        }
    }
}

fn train_and_report(c: &mut ClientState, cfg: &RunConfig, round: usize) -> Result<(ClientUpdate<f64>, EvalOutcome)> {
    if cfg.reset_optimizer_each_round {
        c.optimizer.reset();
    }
    let mut rng = training_rng(cfg, round, c.data.id);
    for _ in 0..cfg.local_epochs {
        if !local_step(&mut c.params, &mut c.optimizer, &c.data.train, cfg, &mut rng)? {
            break;
        }
    }
    let outcome = validation_outcome(&c.params, &c.data, cfg)?;
    c.last_p = outcome.performance();
    let update = ClientUpdate::new(c.data.id, c.params.embedding.clone(), c.data.n_k(), c.last_p)?;
    Ok((update, outcome))
}

pub(crate) fn early_stop_round(history: &[(usize, f64)], patience: usize) -> Option<usize> {
    let values: Vec<f64> = history.iter().map(|&(_, v)| v).collect();
    convergence_round(&values, patience, 0.0).map(|i| history[i].0)
}

pub(crate) fn finish(
    cfg: &RunConfig,
    rounds: Vec<RoundReport>,
    history: Vec<(usize, f64)>,
    test_outcomes: Vec<EvalOutcome>,
) -> Result<ExperimentResult> {
    let convergence = early_stop_round(&history, cfg.patience);
    let rounds_executed = rounds.len();
    let summary = Summary {
        means: MetricMeans::of(&test_outcomes),
        fairness_variance: FairnessReport::of(&test_outcomes)?.variance,
        convergence_round: convergence,
        rounds_executed,
        early_stopped: rounds_executed < cfg.total_rounds,
        total_bytes: rounds.last().map_or(0, |r| r.cumulative_bytes),
    };
    Ok(ExperimentResult {
        algorithm: cfg.algorithm,
        seed: cfg.seed,
        rounds,
        history,
        test_outcomes,
        summary,
    })
}

/// Rounds until `total_rounds` or until validation HR@10 has not improved
/// for `patience` evaluations, then evaluates every client on its test target.
pub fn run_experiment(config: &RunConfig, datasets: &[ClientDataset], num_items: usize) -> Result<ExperimentResult> {
    if config.algorithm == super::Algorithm::Central {
        return super::run_central(config, datasets, num_items);
    }
    let mut fed = Federation::new(config.clone(), datasets.to_vec(), num_items)?;
    let mut rounds = Vec::new();
    for _ in 0..config.total_rounds {
        let report = fed.run_round()?;
        let evaluated = report.validation_hr10.is_some();
        rounds.push(report);
        if evaluated && early_stop_round(&fed.server.history, config.patience).is_some() {
            break;
        }
    }
    let personalize = config.algorithm.personalizes() && !rounds.is_empty();
    let test = fed.test_all(personalize)?;
    let history = fed.server.history.clone();
    finish(config, rounds, history, test)
}
