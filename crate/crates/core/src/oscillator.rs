//! Truncated harmonic-oscillator space in units with hbar = omega = m = 1.
//!
//! Quadrature operators are stored as dense matrices on levels `0..N`.
//! The squared quadratures are the exact (untruncated) pentadiagonal
//! matrices restricted to the retained levels, so expectation values of
//! `x^2` and `p^2` in states supported on `0..N` carry no truncation error.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TruncatedSpace {
    dim: usize,
}

impl TruncatedSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension { got: 0, min: 1 });
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `E_j = j + 1/2`.
    pub fn energy<T: Real>(&self, level: usize) -> T {
        T::from_usize_lossy(level) + T::lit(0.5)
    }

    pub fn energies<T: Real>(&self) -> Vec<T> {
        (0..self.dim).map(|j| self.energy(j)).collect()
    }

    /// Energy of the highest retained level, `N - 1/2`.
    pub fn cutoff_energy<T: Real>(&self) -> T {
        self.energy(self.dim - 1)
    }

    /// Classical turning point scale `sqrt(2N)` used to size position grids.
    pub fn turning_scale<T: Real>(&self) -> T {
        (T::lit(2.0) * T::from_usize_lossy(self.dim)).sqrt()
    }
}

pub fn build_space(dim: usize) -> Result<TruncatedSpace> {
    TruncatedSpace::new(dim)
}

/// `sqrt((j+1)/2)`: the `<j|x|j+1>` ladder element.
#[inline]
pub(crate) fn ladder<T: Real>(j: usize) -> T {
    (T::from_usize_lossy(j + 1) * T::lit(0.5)).sqrt()
}

#[derive(Clone, Debug)]
pub struct QuadratureMatrices<T> {
    space: TruncatedSpace,
    /// `<j|x|k>`, real symmetric tridiagonal.
    pub x_mat: CMatrix<T>,
    /// `<j|p|k>`, purely imaginary Hermitian tridiagonal.
    pub p_mat: CMatrix<T>,
    /// `<j|x^2|k>` from the untruncated algebra.
    pub x2_mat: CMatrix<T>,
    /// `<j|p^2|k>` from the untruncated algebra.
    pub p2_mat: CMatrix<T>,
    pub energies: Vec<T>,
    ladder: Vec<T>,
}

impl<T: Real> QuadratureMatrices<T> {
    pub fn new(space: TruncatedSpace) -> Self {
        let n = space.dim();
        let ladder: Vec<T> = (0..n.saturating_sub(1)).map(ladder::<T>).collect();
        let mut x_mat = CMatrix::zeros(n, n);
        let mut p_mat = CMatrix::zeros(n, n);
        for (j, &s) in ladder.iter().enumerate() {
            x_mat[(j, j + 1)] = Complex::new(s, T::zero());
            x_mat[(j + 1, j)] = Complex::new(s, T::zero());
            p_mat[(j, j + 1)] = Complex::new(T::zero(), -s);
            p_mat[(j + 1, j)] = Complex::new(T::zero(), s);
        }
        let mut x2_mat = CMatrix::zeros(n, n);
        let mut p2_mat = CMatrix::zeros(n, n);
        for j in 0..n {
            let diag = Complex::new(space.energy::<T>(j), T::zero());
            x2_mat[(j, j)] = diag;
            p2_mat[(j, j)] = diag;
            if j + 2 < n {
                // <j|x^2|j+2> = sqrt((j+1)(j+2))/2, and the p^2 element is its negative
                let off = (T::from_usize_lossy((j + 1) * (j + 2))).sqrt() * T::lit(0.5);
                x2_mat[(j, j + 2)] = Complex::new(off, T::zero());
                x2_mat[(j + 2, j)] = Complex::new(off, T::zero());
                p2_mat[(j, j + 2)] = Complex::new(-off, T::zero());
                p2_mat[(j + 2, j)] = Complex::new(-off, T::zero());
            }
        }
        Self {
            space,
            x_mat,
            p_mat,
            x2_mat,
            p2_mat,
            energies: space.energies(),
            ladder,
        }
    }

    pub fn space(&self) -> TruncatedSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `<a|x|b>` and `<a|p|b>` for coefficient vectors over the levels,
    /// in O(N) using the tridiagonal structure.
    pub fn cross_xp(&self, a: &[Complex<T>], b: &[Complex<T>]) -> (Complex<T>, Complex<T>) {
        let mut x = Complex::zero();
        let mut p = Complex::zero();
        for (j, &s) in self.ladder.iter().enumerate() {
            let up = a[j].conj() * b[j + 1];
            let down = a[j + 1].conj() * b[j];
            x = x + (up + down).scale(s);
            // -i * up + i * down
            let d = down - up;
            p = p + Complex::new(-d.im, d.re).scale(s);
        }
        (x, p)
    }

    /// `<a|x|a>` and `<a|p|a>` as reals (imaginary parts vanish identically).
    pub fn mean_xp(&self, a: &[Complex<T>]) -> (T, T) {
        let two = T::lit(2.0);
        let mut x = T::zero();
        let mut p = T::zero();
        for (j, &s) in self.ladder.iter().enumerate() {
            let z = a[j].conj() * a[j + 1];
            x = x + two * s * z.re;
            p = p + two * s * z.im;
        }
        (x, p)
    }

    /// `<a|x^2|a>` and `<a|p^2|a>` from the exact pentadiagonal elements.
    pub fn mean_x2p2(&self, a: &[Complex<T>]) -> (T, T) {
        let n = self.dim();
        let mut diag = T::zero();
        let mut off = T::zero();
        for j in 0..n {
            diag = diag + a[j].norm_sqr() * self.energies[j];
            if j + 2 < n {
                let w = (T::from_usize_lossy((j + 1) * (j + 2))).sqrt();
                // 2 Re(conj(a_j) a_{j+2}) * sqrt((j+1)(j+2))/2
                off = off + w * (a[j].conj() * a[j + 2]).re;
            }
        }
        (diag + off, diag - off)
    }
}

pub fn build_quadratures<T: Real>(space: TruncatedSpace) -> QuadratureMatrices<T> {
    QuadratureMatrices::new(space)
}

/// Uniformly spaced grid with both endpoints included.
pub fn uniform_grid<T: Real>(lo: T, hi: T, points: usize) -> Vec<T> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize_lossy(points - 1);
            (0..points).map(|i| lo + step * T::from_usize_lossy(i)).collect()
        }
    }
}

pub const DEFAULT_GRID_POINTS: usize = 4096;

/// `[-1.5 sqrt(2N), 1.5 sqrt(2N)]` with 4096 points.
pub fn default_grid<T: Real>(space: TruncatedSpace) -> Vec<T> {
    let half = T::lit(1.5) * space.turning_scale::<T>();
    uniform_grid(-half, half, DEFAULT_GRID_POINTS)
}

/// Trapezoidal rule on an arbitrary (sorted) grid.
pub fn trapezoid<T: Real>(xs: &[T], ys: &[T]) -> T {
    assert_eq!(xs.len(), ys.len());
    xs.windows(2).zip(ys.windows(2)).fold(T::zero(), |acc, (x, y)| {
        acc + (x[1] - x[0]) * (y[0] + y[1]) * T::lit(0.5)
    })
}

/// Normalized Hermite functions `phi_j(x)` for `j < dim`, indexed `[j][i]`.
///
/// Uses the normalized three-term recurrence on the polynomial part and
/// applies the Gaussian factor at the end; a running logarithmic scale keeps
/// the intermediate values in range for large `j` and `|x|`.
pub fn eval_eigenfunctions<T: Real>(space: TruncatedSpace, grid: &[T]) -> Result<Vec<Vec<T>>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(index) = grid.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteGrid { index });
    }
    let n = space.dim();
    let mut table = vec![vec![T::zero(); grid.len()]; n];
    let coef: Vec<(T, T)> = (0..n)
        .map(|j| {
            let jp = T::from_usize_lossy(j + 1);
            ((T::lit(2.0) / jp).sqrt(), (T::from_usize_lossy(j) / jp).sqrt())
        })
        .collect();
    let big = T::max_value().sqrt().sqrt();
    let norm0 = T::PI().powf(T::lit(-0.25));

    for (i, &x) in grid.iter().enumerate() {
        let gauss_log = -x * x * T::lit(0.5);
        // polynomial parts, scaled by exp(log_scale)
        let mut prev = T::zero();
        let mut cur = norm0;
        let mut log_scale = T::zero();
        table[0][i] = norm0 * gauss_log.exp();
        for j in 0..n - 1 {
            let (a, b) = coef[j];
            let next = x * a * cur - b * prev;
            prev = cur;
            cur = next;
            if cur.abs() > big {
                let r = cur.abs();
                cur = cur / r;
                prev = prev / r;
                log_scale = log_scale + r.ln();
            }
            table[j + 1][i] = if cur.is_zero() {
                T::zero()
            } else {
                cur.signum() * (cur.abs().ln() + log_scale + gauss_log).exp()
            };
        }
    }
    Ok(table)
}
