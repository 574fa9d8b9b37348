use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding;
use crate::tensor::Matrix;

/// GRU gate index into the weight triples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Update = 0,
    Reset = 1,
    Candidate = 2,
}

/// Learnable state of the recommender.
///
/// Only `embedding` is shared with the server; the gate weights stay on the
/// client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params<S> {
    /// `[num_items × d]`
    pub embedding: Matrix<S>,
    /// `[d × d]` per gate, applied to the input embedding.
    pub input_weights: [Matrix<S>; 3],
    /// `[d × d]` per gate, applied to the previous hidden state.
    pub recurrent_weights: [Matrix<S>; 3],
    pub biases: [Vec<S>; 3],
}

impl<S: Scalar> Params<S> {
    pub fn zeros(num_items: usize, dim: usize) -> Self {
        Self {
            embedding: Matrix::zeros(num_items, dim),
            input_weights: std::array::from_fn(|_| Matrix::zeros(dim, dim)),
            recurrent_weights: std::array::from_fn(|_| Matrix::zeros(dim, dim)),
            biases: std::array::from_fn(|_| vec![S::zero(); dim]),
        }
    }

    /// Uniform init in `[-1/√d, 1/√d]`, biases zero.
    pub fn init(num_items: usize, dim: usize, seed: u64) -> Result<Self> {
        if num_items == 0 || dim == 0 {
            return Err(Error::config("num_items and embedding dim must be positive"));
        }
        let mut rng = seeding::rng_for(&[seed, seeding::TAG_INIT]);
        let bound = 1.0 / (dim as f64).sqrt();
        let mut draw = || S::lit(rng.gen_range(-bound..=bound));
        let embedding = Matrix::from_fn(num_items, dim, |_, _| draw());
        let input_weights = std::array::from_fn(|_| Matrix::from_fn(dim, dim, |_, _| draw()));
        let recurrent_weights = std::array::from_fn(|_| Matrix::from_fn(dim, dim, |_, _| draw()));
        Ok(Self {
            embedding,
            input_weights,
            recurrent_weights,
            biases: std::array::from_fn(|_| vec![S::zero(); dim]),
        })
    }

    #[inline]
    pub fn num_items(&self) -> usize {
        self.embedding.rows()
    }

    /// Embedding width, which is also the hidden size.
    #[inline]
    pub fn dim(&self) -> usize {
        self.embedding.cols()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.num_items(), self.dim())
    }

    pub fn num_entries(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// All parameter blocks in a fixed order.
    pub fn slices(&self) -> [&[S]; 10] {
        [
            self.embedding.as_slice(),
            self.input_weights[0].as_slice(),
            self.input_weights[1].as_slice(),
            self.input_weights[2].as_slice(),
            self.recurrent_weights[0].as_slice(),
            self.recurrent_weights[1].as_slice(),
            self.recurrent_weights[2].as_slice(),
            &self.biases[0],
            &self.biases[1],
            &self.biases[2],
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [S]; 10] {
        let [wi0, wi1, wi2] = &mut self.input_weights;
        let [wr0, wr1, wr2] = &mut self.recurrent_weights;
        let [b0, b1, b2] = &mut self.biases;
        [
            self.embedding.as_mut_slice(),
            wi0.as_mut_slice(),
            wi1.as_mut_slice(),
            wi2.as_mut_slice(),
            wr0.as_mut_slice(),
            wr1.as_mut_slice(),
            wr2.as_mut_slice(),
            b0.as_mut_slice(),
            b1.as_mut_slice(),
            b2.as_mut_slice(),
        ]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.slices()
            .iter()
            .zip(other.slices().iter())
            .all(|(a, b)| a.len() == b.len())
            && self.embedding.shape() == other.embedding.shape()
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(
                format!("params {}x{}", self.num_items(), self.dim()),
                format!("params {}x{}", other.num_items(), other.dim()),
            ))
        }
    }

    /// `self += scale · src` over every parameter.
    pub fn axpy(&mut self, src: &Self, scale: S) -> Result<()> {
        self.check_shape(src)?;
        for (d, s) in self.slices_mut().into_iter().zip(src.slices()) {
            for (x, &y) in d.iter_mut().zip(s) {
                *x += scale * y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: S) {
        for block in self.slices_mut() {
            block.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Largest absolute entry across all blocks.
    pub fn max_abs(&self) -> S {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(S::zero(), |m, v| m.max(v.abs()))
    }
}
