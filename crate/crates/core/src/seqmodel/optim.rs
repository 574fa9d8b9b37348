use serde::{Deserialize, Serialize};

use super::params::Params;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Adam moment accumulators, shaped like the parameters they track.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState<S> {
    pub first_moment: Params<S>,
    pub second_moment: Params<S>,
    pub step_count: u64,
}

impl<S: Scalar> OptimizerState<S> {
    pub fn new(like: &Params<S>) -> Self {
        Self {
            first_moment: like.zeros_like(),
            second_moment: like.zeros_like(),
            step_count: 0,
        }
    }

    pub fn reset(&mut self) {
        self.first_moment.scale(S::zero());
        self.second_moment.scale(S::zero());
        self.step_count = 0;
    }
}

/// Applies one update in place and increments the step count.
pub fn optimizer_step<S: Scalar>(
    params: &mut Params<S>,
    grads: &Params<S>,
    state: &mut OptimizerState<S>,
    lr: f64,
    kind: OptimizerKind,
) -> Result<()> {
    if lr.is_nan() || lr <= 0.0 {
        return Err(Error::input(format!("learning rate must be positive, got {lr}")));
    }
    params.check_shape(grads)?;
    params.check_shape(&state.first_moment)?;
    state.step_count += 1;
    let lr = S::lit(lr);

    match kind {
        OptimizerKind::Sgd => {
            params.axpy(grads, -lr)?;
        }
        OptimizerKind::Adam => {
            let t = state.step_count as i32;
            let b1 = S::lit(ADAM_BETA1);
            let b2 = S::lit(ADAM_BETA2);
            let eps = S::lit(ADAM_EPS);
            let c1 = S::one() - b1.powi(t);
            let c2 = S::one() - b2.powi(t);
            let blocks = params
                .slices_mut()
                .into_iter()
                .zip(grads.slices())
                .zip(state.first_moment.slices_mut())
                .zip(state.second_moment.slices_mut());
            for (((p, g), m), v) in blocks {
                for i in 0..p.len() {
                    let gi = g[i];
                    m[i] = b1 * m[i] + (S::one() - b1) * gi;
                    v[i] = b2 * v[i] + (S::one() - b2) * gi * gi;
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
    Ok(())
}
