//! Dense rank-3 arrays used for Christoffel symbols, curvature components and
//! structure constants.

use std::ops::{Index, IndexMut};

/// Row-major `a × b × c` array of reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(a: usize, b: usize, c: usize) -> Self {
        Self {
            shape: [a, b, c],
            data: vec![0.0; a * b * c],
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.shape[0] && j < self.shape[1] && k < self.shape[2]);
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Contiguous fiber `(i, j, ·)`.
    #[inline]
    pub fn fiber(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j, 0);
        &self.data[o..o + self.shape[2]]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest entrywise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.shape, other.shape, "tensor shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, s: f64) -> Tensor3 {
        Tensor3 {
            shape: self.shape,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.shape, other.shape, "tensor shape mismatch");
        Tensor3 {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.shape, other.shape, "tensor shape mismatch");
        Tensor3 {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i, j, k)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        let o = self.offset(i, j, k);
        &mut self.data[o]
    }
}
