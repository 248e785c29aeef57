//! Banded matrices with an in-place LU factorization (no pivoting).
//!
//! Every matrix the solvers factor is either symmetric positive definite or
//! column diagonally dominant, so elimination without pivoting is stable and
//! keeps the fill inside the band.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    size: usize,
    half_width: usize,
    // row i holds columns i - half_width ..= i + half_width
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(size: usize, half_width: usize) -> Self {
        Self { size, half_width, data: vec![T::zero(); size * (2 * half_width + 1)] }
    }

    pub fn identity(size: usize, half_width: usize) -> Self {
        let mut m = Self::zeros(size, half_width);
        for i in 0..size {
            m.add(i, i, T::one());
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.size || j >= self.size || i.abs_diff(j) > self.half_width {
            return None;
        }
        Some(i * (2 * self.half_width + 1) + (j + self.half_width - i))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Adds `v` to entry (i, j). Panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = self.data[s] + v;
    }

    /// `self + alpha * other` for matrices of equal size and bandwidth.
    pub fn axpy(&mut self, alpha: T, other: &BandMatrix<T>) {
        assert_eq!(self.size, other.size);
        assert_eq!(self.half_width, other.half_width);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + alpha * *b;
        }
    }

    /// Multiplies column j by `scale[j]`.
    pub fn scale_columns(&mut self, scale: &[T]) {
        let w = self.half_width;
        for i in 0..self.size {
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(self.size - 1);
            for j in lo..=hi {
                let s = i * (2 * w + 1) + (j + w - i);
                self.data[s] = self.data[s] * scale[j];
            }
        }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        let w = self.half_width;
        for i in 0..self.size {
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(self.size - 1);
            let row = &self.data[i * (2 * w + 1)..];
            let mut acc = T::zero();
            for j in lo..=hi {
                acc = acc + row[j + w - i] * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.size).all(|i| {
            let hi = (i + self.half_width).min(self.size.saturating_sub(1));
            (i..=hi).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol)
        })
    }

    /// Factors the matrix as L U in place. With `require_positive` every pivot
    /// must be strictly positive, which for symmetric input is the
    /// positive-definiteness test.
    pub fn factor(mut self, require_positive: bool) -> Result<BandLu<T>> {
        let n = self.size;
        let w = self.half_width;
        let stride = 2 * w + 1;
        for k in 0..n {
            let pivot = self.data[k * stride + w];
            if !pivot.is_finite() || pivot == T::zero() || (require_positive && pivot <= T::zero()) {
                return Err(Error::Factorization {
                    pivot: k,
                    reason: format!("pivot {pivot} is not admissible"),
                });
            }
            let last = (k + w).min(n - 1);
            for i in k + 1..=last {
                let ik = i * stride + (k + w - i);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..=last {
                    let kj = k * stride + (j + w - k);
                    let ij = i * stride + (j + w - i);
                    self.data[ij] = self.data[ij] - l * self.data[kj];
                }
            }
        }
        Ok(BandLu { lu: self })
    }
}

/// LU factors of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    lu: BandMatrix<T>,
}

impl<T: Real> BandLu<T> {
    pub fn size(&self) -> usize {
        self.lu.size
    }

    /// Solves `A x = b`, overwriting `b` with `x`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.lu.size;
        let w = self.lu.half_width;
        let stride = 2 * w + 1;
        let d = &self.lu.data;
        for i in 0..n {
            let lo = i.saturating_sub(w);
            let mut acc = b[i];
            for j in lo..i {
                acc = acc - d[i * stride + (j + w - i)] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + w).min(n - 1);
            let mut acc = b[i];
            for j in i + 1..=hi {
                acc = acc - d[i * stride + (j + w - i)] * b[j];
            }
            b[i] = acc / d[i * stride + w];
        }
    }
}
