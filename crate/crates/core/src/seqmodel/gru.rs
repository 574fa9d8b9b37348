use rand::seq::index;
use rand::Rng as _;

use super::params::{Gate, Params};
use super::ItemId;
use crate::error::{Error, Result};
use crate::scalar::{dot, sigmoid, Scalar};
use crate::seeding;

const Z: usize = Gate::Update as usize;
const R: usize = Gate::Reset as usize;
const N: usize = Gate::Candidate as usize;

/// One supervised position: the hidden state after consuming
/// `sequence[position]` should rank `item` above `negatives`.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    pub position: usize,
    pub item: ItemId,
    pub negatives: Vec<ItemId>,
}

struct StepCache<S> {
    item: ItemId,
    /// Inverted-dropout factor per input dimension, `None` when dropout is off.
    mask: Option<Vec<S>>,
    x: Vec<S>,
    h_prev: Vec<S>,
    z: Vec<S>,
    r: Vec<S>,
    n: Vec<S>,
    rh: Vec<S>,
}

struct Trace<S> {
    steps: Vec<StepCache<S>>,
    /// `hidden[t]` is the state after step `t`.
    hidden: Vec<Vec<S>>,
}

fn check_items<S: Scalar>(params: &Params<S>, items: &[ItemId], what: &str) -> Result<()> {
    let n = params.num_items();
    match items.iter().find(|&&i| i as usize >= n) {
        Some(bad) => Err(Error::input(format!(
            "{what} item id {bad} out of range (num_items = {n})"
        ))),
        None => Ok(()),
    }
}

fn run<S: Scalar>(params: &Params<S>, sequence: &[ItemId], dropout_rate: f64, rng_seed: u64) -> Result<Trace<S>> {
    if sequence.is_empty() {
        return Err(Error::input("sequence is empty"));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::input(format!("dropout rate {dropout_rate} outside [0, 1)")));
    }
    check_items(params, sequence, "sequence")?;

    let d = params.dim();
    let keep_scale = S::lit(1.0 / (1.0 - dropout_rate));
    let mut rng = (dropout_rate > 0.0).then(|| seeding::rng_for(&[rng_seed]));

    let mut h = vec![S::zero(); d];
    let mut steps = Vec::with_capacity(sequence.len());
    let mut hidden = Vec::with_capacity(sequence.len());
    for &item in sequence {
        let emb = params.embedding.row(item as usize);
        let mask = rng.as_mut().map(|rng| {
            (0..d)
                .map(|_| if rng.gen::<f64>() < dropout_rate { S::zero() } else { keep_scale })
                .collect::<Vec<S>>()
        });
        let x: Vec<S> = match &mask {
            Some(m) => emb.iter().zip(m).map(|(&e, &k)| e * k).collect(),
            None => emb.to_vec(),
        };

        let mut a_z = params.biases[Z].clone();
        let mut a_r = params.biases[R].clone();
        let mut a_n = params.biases[N].clone();
        params.input_weights[Z].mul_vec_add(&x, &mut a_z);
        params.input_weights[R].mul_vec_add(&x, &mut a_r);
        params.input_weights[N].mul_vec_add(&x, &mut a_n);
        params.recurrent_weights[Z].mul_vec_add(&h, &mut a_z);
        params.recurrent_weights[R].mul_vec_add(&h, &mut a_r);

        let z: Vec<S> = a_z.into_iter().map(sigmoid).collect();
        let r: Vec<S> = a_r.into_iter().map(sigmoid).collect();
        let rh: Vec<S> = r.iter().zip(&h).map(|(&r, &h)| r * h).collect();
        params.recurrent_weights[N].mul_vec_add(&rh, &mut a_n);
        let n: Vec<S> = a_n.into_iter().map(|a| a.tanh()).collect();

        let h_next: Vec<S> = (0..d)
            .map(|i| (S::one() - z[i]) * n[i] + z[i] * h[i])
            .collect();
        steps.push(StepCache {
            item,
            mask,
            x,
            h_prev: std::mem::replace(&mut h, h_next.clone()),
            z,
            r,
            n,
            rh,
        });
        hidden.push(h_next);
    }
    Ok(Trace { steps, hidden })
}

/// Final hidden state after running the GRU over `sequence` from a zero state.
///
/// Inverted dropout is applied to the embedding inputs when `dropout_rate > 0`;
/// the mask is drawn from `rng_seed`.
pub fn forward<S: Scalar>(params: &Params<S>, sequence: &[ItemId], dropout_rate: f64, rng_seed: u64) -> Result<Vec<S>> {
    let mut trace = run(params, sequence, dropout_rate, rng_seed)?;
    Ok(trace.hidden.pop().expect("non-empty sequence"))
}

/// Tied-embedding scores `hidden · embedding[c]` for each candidate.
pub fn score<S: Scalar>(params: &Params<S>, hidden: &[S], candidates: &[ItemId]) -> Result<Vec<S>> {
    if hidden.len() != params.dim() {
        return Err(Error::shape(format!("hidden of size {}", params.dim()), hidden.len()));
    }
    check_items(params, candidates, "candidate")?;
    Ok(candidates
        .iter()
        .map(|&c| dot(hidden, params.embedding.row(c as usize)))
        .collect())
}

/// Sampled-softmax cross-entropy of `target` against `negatives`, given the
/// final hidden state of `sequence`, with exact gradients.
pub fn loss_and_grad<S: Scalar>(
    params: &Params<S>,
    sequence: &[ItemId],
    target: ItemId,
    negatives: &[ItemId],
    dropout_rate: f64,
    rng_seed: u64,
) -> Result<(S, Params<S>)> {
    if sequence.is_empty() {
        return Err(Error::input("sequence is empty"));
    }
    let t = Target {
        position: sequence.len() - 1,
        item: target,
        negatives: negatives.to_vec(),
    };
    sequence_loss_and_grad(params, sequence, std::slice::from_ref(&t), dropout_rate, rng_seed)
}

/// Mean sampled-softmax loss over several supervised positions of one
/// sequence, back-propagated through time in a single pass.
pub fn sequence_loss_and_grad<S: Scalar>(
    params: &Params<S>,
    sequence: &[ItemId],
    targets: &[Target],
    dropout_rate: f64,
    rng_seed: u64,
) -> Result<(S, Params<S>)> {
    if targets.is_empty() {
        return Err(Error::input("no supervised positions"));
    }
    for t in targets {
        if t.position >= sequence.len() {
            return Err(Error::input(format!(
                "target position {} beyond sequence of length {}",
                t.position,
                sequence.len()
            )));
        }
        if t.negatives.is_empty() {
            return Err(Error::input("negatives list is empty"));
        }
        if t.negatives.contains(&t.item) {
            return Err(Error::input(format!("target {} appears among its negatives", t.item)));
        }
        check_items(params, std::slice::from_ref(&t.item), "target")?;
        check_items(params, &t.negatives, "negative")?;
    }

    let trace = run(params, sequence, dropout_rate, rng_seed)?;
    let d = params.dim();
    let inv_count = S::one() / S::from_count(targets.len());
    let mut grads = params.zeros_like();
    let mut dh_loss = vec![vec![S::zero(); d]; sequence.len()];
    let mut total = S::zero();

    for t in targets {
        let h = &trace.hidden[t.position];
        let candidates = std::iter::once(t.item).chain(t.negatives.iter().copied());
        let scores: Vec<S> = candidates
            .clone()
            .map(|c| dot(h, params.embedding.row(c as usize)))
            .collect();
        let max = scores.iter().copied().fold(S::neg_infinity(), S::max);
        let exps: Vec<S> = scores.iter().map(|&s| (s - max).exp()).collect();
        let sum: S = exps.iter().copied().sum();
        total += (max + sum.ln() - scores[0]) * inv_count;

        let dh = &mut dh_loss[t.position];
        for (j, c) in candidates.enumerate() {
            let mut g = exps[j] / sum;
            if j == 0 {
                g -= S::one();
            }
            let g = g * inv_count;
            if g == S::zero() {
                continue;
            }
            let row = params.embedding.row(c as usize);
            for i in 0..d {
                dh[i] += g * row[i];
            }
            for (e, &hi) in grads.embedding.row_mut(c as usize).iter_mut().zip(h) {
                *e += g * hi;
            }
        }
    }

    let mut carry = vec![S::zero(); d];
    for (step, dh_out) in trace.steps.iter().zip(dh_loss).rev() {
        let dh: Vec<S> = carry.iter().zip(&dh_out).map(|(&a, &b)| a + b).collect();
        let mut dh_prev = vec![S::zero(); d];
        let mut da_z = vec![S::zero(); d];
        let mut da_r = vec![S::zero(); d];
        let mut da_n = vec![S::zero(); d];
        for i in 0..d {
            let (z, n) = (step.z[i], step.n[i]);
            dh_prev[i] = dh[i] * z;
            da_n[i] = dh[i] * (S::one() - z) * (S::one() - n * n);
            da_z[i] = dh[i] * (step.h_prev[i] - n) * z * (S::one() - z);
        }
        // candidate gate sees r ⊙ h_prev
        let mut drh = vec![S::zero(); d];
        params.recurrent_weights[N].mul_t_vec_add(&da_n, &mut drh);
        for i in 0..d {
            let r = step.r[i];
            dh_prev[i] += drh[i] * r;
            da_r[i] = drh[i] * step.h_prev[i] * r * (S::one() - r);
        }

        let mut dx = vec![S::zero(); d];
        for (g, da) in [(Z, &da_z), (R, &da_r), (N, &da_n)] {
            grads.input_weights[g].add_outer(da, &step.x);
            params.input_weights[g].mul_t_vec_add(da, &mut dx);
            for (b, &v) in grads.biases[g].iter_mut().zip(da.iter()) {
                *b += v;
            }
        }
        grads.recurrent_weights[Z].add_outer(&da_z, &step.h_prev);
        grads.recurrent_weights[R].add_outer(&da_r, &step.h_prev);
        grads.recurrent_weights[N].add_outer(&da_n, &step.rh);
        params.recurrent_weights[Z].mul_t_vec_add(&da_z, &mut dh_prev);
        params.recurrent_weights[R].mul_t_vec_add(&da_r, &mut dh_prev);

        let row = grads.embedding.row_mut(step.item as usize);
        match &step.mask {
            Some(mask) => row.iter_mut().zip(&dx).zip(mask).for_each(|((e, &g), &m)| *e += g * m),
            None => row.iter_mut().zip(&dx).for_each(|(e, &g)| *e += g),
        }
        carry = dh_prev;
    }
    Ok((total, grads))
}

/// Next-item supervision for every position of `sequence`: the state after
/// `sequence[t]` predicts `sequence[t + 1]`. Negatives are drawn uniformly
/// without replacement from all items other than the target.
///
/// Returns the input prefix (`sequence` without its last item) and the targets;
/// both are empty when `sequence` has fewer than two items.
pub fn training_targets<'a, R: rand::Rng + ?Sized>(
    sequence: &'a [ItemId],
    num_items: usize,
    num_negatives: usize,
    rng: &mut R,
) -> (&'a [ItemId], Vec<Target>) {
    if sequence.len() < 2 || num_items < 2 {
        return (&[], Vec::new());
    }
    let k = num_negatives.min(num_items - 1);
    let targets = sequence
        .windows(2)
        .enumerate()
        .map(|(position, w)| {
            let item = w[1];
            let negatives = index::sample(rng, num_items - 1, k)
                .into_iter()
                .map(|i| if i >= item as usize { i as ItemId + 1 } else { i as ItemId })
                .collect();
            Target { position, item, negatives }
        })
        .collect();
    (&sequence[..sequence.len() - 1], targets)
}
