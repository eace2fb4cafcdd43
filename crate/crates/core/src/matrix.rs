//! Dense row-major complex matrices.
//!
//! Only the handful of operations the basis search and the thermal
//! analysis need: products, adjoints, residual norms and row-wise
//! modified Gram-Schmidt.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data; `None` if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex<T>] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    /// Mutable access to two distinct rows at once.
    pub fn row_pair_mut(&mut self, a: usize, b: usize) -> (&mut [Complex<T>], &mut [Complex<T>]) {
        assert_ne!(a, b, "row_pair_mut needs distinct rows");
        let c = self.cols;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * c);
            (&mut lo[a * c..(a + 1) * c], &mut hi[..c])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * c);
            let rb = &mut lo[b * c..(b + 1) * c];
            (&mut hi[..c], rb)
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] = out.data[i * rhs.cols + j] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// `max |A - A^H|` over all entries.
    pub fn hermiticity_residual(&self) -> T {
        assert!(self.is_square());
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |U U^H - I|` over all entries, computed without forming U U^H.
    pub fn unitarity_residual(&self) -> T {
        let mut worst = T::zero();
        for a in 0..self.rows {
            for b in a..self.rows {
                let dot = inner(self.row(a), self.row(b));
                let target = if a == b { Complex::one() } else { Complex::zero() };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// Re-orthonormalizes the rows in place by modified Gram-Schmidt.
    ///
    /// Returns `false` if a row collapsed to (numerically) zero norm.
    pub fn orthonormalize_rows(&mut self) -> bool {
        let tiny = T::epsilon() * T::epsilon();
        for i in 0..self.rows {
            for k in 0..i {
                let (prev, cur) = self.row_pair_mut(k, i);
                // projection coefficient <prev|cur>
                let c = inner(prev, cur);
                for (x, p) in cur.iter_mut().zip(prev.iter()) {
                    *x = *x - c * p;
                }
            }
            let norm = self.row(i).iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
            if norm <= tiny {
                return false;
            }
            for x in self.row_mut(i) {
                *x = *x / norm;
            }
        }
        true
    }
}

/// `sum_j conj(a_j) b_j`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y)
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn identity_is_unitary_and_hermitian() {
        let m = CMatrix::<f64>::identity(5);
        assert_eq!(m.unitarity_residual(), 0.0);
        assert_eq!(m.hermiticity_residual(), 0.0);
        assert_eq!(m.trace(), c(5.0, 0.0));
    }

    #[test]
    fn matmul_against_hand_product() {
        let a = CMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = CMatrix::from_row_major(2, 2, vec![c(0.0, 1.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)]).unwrap();
        let p = a.matmul(&b);
        assert_eq!(p[(0, 0)], c(0.0, 2.0));
        assert_eq!(p[(0, 1)], c(1.0, 3.0));
        assert_eq!(p[(1, 0)], c(0.0, 2.0));
        assert_eq!(p[(1, 1)], c(2.0, 0.0));
    }

    #[test]
    fn row_pair_mut_either_order() {
        let mut m = CMatrix::<f64>::identity(3);
        {
            let (r2, r0) = m.row_pair_mut(2, 0);
            r2[1] = c(7.0, 0.0);
            r0[1] = c(5.0, 0.0);
        }
        assert_eq!(m[(2, 1)], c(7.0, 0.0));
        assert_eq!(m[(0, 1)], c(5.0, 0.0));
    }

    #[test]
    fn gram_schmidt_restores_orthonormality() {
        let mut m = CMatrix::from_fn(4, 4, |i, j| {
            c(1.0 + (i * 4 + j) as f64 * 0.37, (i as f64 - j as f64) * 0.21)
                + if i == j { c(3.0, 0.0) } else { c(0.0, 0.0) }
        });
        assert!(m.unitarity_residual() > 0.1);
        assert!(m.orthonormalize_rows());
        assert!(m.unitarity_residual() < 1e-13);
    }

    #[test]
    fn gram_schmidt_detects_rank_loss() {
        let mut m = CMatrix::from_fn(2, 2, |_, j| c(1.0 + j as f64, 0.0));
        assert!(!m.orthonormalize_rows());
    }

    #[test]
    fn from_row_major_checks_length() {
        assert!(CMatrix::<f64>::from_row_major(2, 2, vec![c(0.0, 0.0); 3]).is_none());
    }
}
