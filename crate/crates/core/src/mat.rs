//! Dense row-major matrices and the symmetric-operator abstraction shared by
//! the dense and iterative eigensolvers.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Build from a row-major buffer; rejects shape mismatch and non-finite
    /// entries with an input error.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "buffer of length {} does not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::input(format!(
                "non-finite entry at row {}, column {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Like [`Mat::from_vec`] but trusted: used internally where entries are
    /// finite by construction.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Squared Euclidean distance between two rows.
    pub fn row_dist_sq(&self, i: usize, j: usize) -> T {
        let (a, b) = (self.row(i), self.row(j));
        let mut s = T::zero();
        for k in 0..self.cols {
            let d = a[k] - b[k];
            s += d * d;
        }
        s
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |a, &x| a + x * x).sqrt()
    }

    /// `self * other`
    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == T::zero() {
                    continue;
                }
                let b_row = other.row(k);
                for j in 0..other.cols {
                    out_row[j] += aik * b_row[j];
                }
            }
        }
        out
    }

    /// `self^T * v` for a length-`rows` vector.
    pub fn transpose_apply(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += row[j] * vi;
            }
        }
        out
    }

    pub fn max_abs_asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = (self[(i, j)] - self[(j, i)]).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Average with the transpose, removing floating-point drift.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        let half = T::from_f64_lossy(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric linear operator: enough surface for matrix-free eigensolvers and
/// degree computations over either dense or bit-packed storage.
pub trait SymOp<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    /// `out = A * v`
    fn apply(&self, v: &[T], out: &mut [T]);

    fn row_sums(&self) -> Vec<T> {
        let n = self.dim();
        let ones = vec![T::one(); n];
        let mut out = vec![T::zero(); n];
        self.apply(&ones, &mut out);
        out
    }
}

impl<T: Scalar> SymOp<T> for Mat<T> {
    fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        use rayon::prelude::*;
        let n = self.rows;
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let row = &self.data[i * n..(i + 1) * n];
            let mut s = T::zero();
            for k in 0..n {
                s += row[k] * v[k];
            }
            *o = s;
        });
    }
}

/// Symmetric binary matrix stored one bit per entry, for rounded clustering
/// matrices too large to hold in floating point.
#[derive(Debug, Clone)]
pub struct BitMat {
    n: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMat {
    pub fn zeros(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        BitMat { n, words_per_row, words: vec![0; words_per_row * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        let w = self.words[i * self.words_per_row + j / 64];
        (w >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.words[i * self.words_per_row + j / 64] |= 1u64 << (j % 64);
    }

    pub fn set_sym(&mut self, i: usize, j: usize) {
        self.set(i, j);
        self.set(j, i);
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn ones_in_row(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl<T: Scalar> SymOp<T> for BitMat {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut s = T::zero();
            for (wi, &w) in self.row_words(i).iter().enumerate() {
                let mut bits = w;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    s += v[wi * 64 + b];
                    bits &= bits - 1;
                }
            }
            *o = s;
        });
    }
}
