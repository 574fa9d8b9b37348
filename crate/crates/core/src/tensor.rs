//! Dense row-major matrix used for embedding tables and GRU weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                format!("{} entries ({rows}x{cols})", rows * cols),
                data.len(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    /// `out += self · x`
    pub fn mul_vec_add(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o += crate::scalar::dot(self.row(r), x);
        }
    }

    /// `out += selfᵀ · y`
    pub fn mul_t_vec_add(&self, y: &[S], out: &mut [S]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            if yr == S::zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += yr * w;
            }
        }
    }

    /// `self += y · xᵀ`
    pub fn add_outer(&mut self, y: &[S], x: &[S]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            if yr == S::zero() {
                continue;
            }
            for (m, &xc) in self.row_mut(r).iter_mut().zip(x) {
                *m += yr * xc;
            }
        }
    }

    /// `self += scale · src`, elementwise.
    pub fn axpy(&mut self, src: &Matrix<S>, scale: S) -> Result<()> {
        if self.shape() != src.shape() {
            return Err(Error::shape(
                format!("{:?}", self.shape()),
                format!("{:?}", src.shape()),
            ));
        }
        for (d, &s) in self.data.iter_mut().zip(&src.data) {
            *d += scale * s;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: S) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn fill(&mut self, v: S) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
