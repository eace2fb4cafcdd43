//! Orthonormal bases of the truncated space and their phase-space moments.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::oscillator::{QuadratureMatrices, TruncatedSpace};
use crate::Real;

/// Row `n` of `coeffs` holds `U_{n,j}`, the expansion of the `n`-th basis
/// state over oscillator levels `|j>`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedBasis<T> {
    space: TruncatedSpace,
    coeffs: CMatrix<T>,
}

impl<T: Real> LocalizedBasis<T> {
    /// Oscillator eigenstates themselves.
    pub fn identity(space: TruncatedSpace) -> Self {
        Self {
            space,
            coeffs: CMatrix::identity(space.dim()),
        }
    }

    /// Wraps a coefficient matrix; it must be square with the space's
    /// dimension. Unitarity is not checked here (see [`Self::unitarity_residual`]).
    pub fn from_coeffs(space: TruncatedSpace, coeffs: CMatrix<T>) -> Result<Self> {
        if coeffs.rows() != space.dim() || coeffs.cols() != space.dim() {
            return Err(Error::InvalidArgument(format!(
                "coefficient matrix is {}x{}, space has dimension {}",
                coeffs.rows(),
                coeffs.cols(),
                space.dim()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn space(&self) -> TruncatedSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn coeffs(&self) -> &CMatrix<T> {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut CMatrix<T> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> CMatrix<T> {
        self.coeffs
    }

    pub fn row(&self, n: usize) -> &[Complex<T>] {
        self.coeffs.row(n)
    }

    pub fn unitarity_residual(&self) -> T {
        self.coeffs.unitarity_residual()
    }
}

pub fn init_identity<T: Real>(space: TruncatedSpace) -> LocalizedBasis<T> {
    LocalizedBasis::identity(space)
}

/// Moments of a single basis state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateMoments<T> {
    pub mean_x: T,
    pub mean_p: T,
    pub mean_x2: T,
    pub mean_p2: T,
}

impl<T: Real> StateMoments<T> {
    pub fn dx2(&self) -> T {
        self.mean_x2 - self.mean_x * self.mean_x
    }

    pub fn dp2(&self) -> T {
        self.mean_p2 - self.mean_p * self.mean_p
    }

    /// `dx^2 + dp^2`, the per-state phase-space variance.
    pub fn variance(&self) -> T {
        self.dx2() + self.dp2()
    }

    pub fn uncertainty_product(&self) -> T {
        self.dx2() * self.dp2()
    }
}

/// Per-state quadrature moments of a whole basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureMoments<T> {
    pub states: Vec<StateMoments<T>>,
}

impl<T: Real> QuadratureMoments<T> {
    pub fn compute(basis: &LocalizedBasis<T>, quads: &QuadratureMatrices<T>) -> Self {
        let states = (0..basis.dim())
            .map(|n| {
                let row = basis.row(n);
                let (mean_x, mean_p) = quads.mean_xp(row);
                let (mean_x2, mean_p2) = quads.mean_x2p2(row);
                StateMoments {
                    mean_x,
                    mean_p,
                    mean_x2,
                    mean_p2,
                }
            })
            .collect();
        Self { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Smallest `dx^2 dp^2` over the states.
    pub fn min_uncertainty_product(&self) -> T {
        self.states
            .iter()
            .map(StateMoments::uncertainty_product)
            .fold(T::infinity(), T::min)
    }

    pub fn total_variance(&self) -> T {
        self.states.iter().fold(T::zero(), |acc, s| acc + s.variance())
    }
}

/// `<a|O|a>` for a Hermitian operator via the dense matrix. Used to audit
/// that diagonal expectations come out real.
fn dense_expectation<T: Real>(op: &CMatrix<T>, a: &[Complex<T>]) -> Complex<T> {
    let n = a.len();
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in 0..n {
        let mut row = Complex::new(T::zero(), T::zero());
        for k in j.saturating_sub(1)..(j + 2).min(n) {
            row = row + op[(j, k)] * a[k];
        }
        acc = acc + a[j].conj() * row;
    }
    acc
}

/// `S = sum_n <n|x|n>^2 + <n|p|n>^2`.
///
/// The expectations are evaluated as complex numbers against the stored
/// operator matrices; an imaginary part above `1e-9` means the rows are
/// no longer a sensible basis.
pub fn objective_s<T: Real>(basis: &LocalizedBasis<T>, quads: &QuadratureMatrices<T>) -> Result<T> {
    let limit = T::tolerance(1e-9, 64.0 * basis.dim() as f64);
    let mut s = T::zero();
    for n in 0..basis.dim() {
        let row = basis.row(n);
        let x = dense_expectation(&quads.x_mat, row);
        let p = dense_expectation(&quads.p_mat, row);
        let residue = x.im.abs().max(p.im.abs());
        if residue > limit {
            return Err(Error::ImaginaryResidue {
                residue: residue.to_f64_lossy(),
            });
        }
        s = s + x.re * x.re + p.re * p.re;
    }
    Ok(s)
}

/// Average of `dx^2 + dp^2` over the basis.
///
/// Evaluated as `(N^2 - S)/N` using the invariance of
/// `sum_n <x^2 + p^2>_n = sum_j (2j + 1) = N^2`, and cross-checked against
/// the direct per-state sum.
pub fn mean_variance<T: Real>(basis: &LocalizedBasis<T>, quads: &QuadratureMatrices<T>) -> Result<T> {
    let n = T::from_usize_lossy(basis.dim());
    let s = objective_s(basis, quads)?;
    let via_trace = (n * n - s) / n;
    let direct = QuadratureMoments::compute(basis, quads).total_variance() / n;
    let limit = T::tolerance(1e-6, 64.0 * (basis.dim() * basis.dim()) as f64);
    if (via_trace - direct).abs() > limit {
        return Err(Error::VarianceMismatch {
            trace: via_trace.to_f64_lossy(),
            direct: direct.to_f64_lossy(),
        });
    }
    Ok(via_trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{build_quadratures, build_space};
    use approx::assert_abs_diff_eq;

    fn setup(n: usize) -> (LocalizedBasis<f64>, QuadratureMatrices<f64>) {
        let s = build_space(n).unwrap();
        (init_identity(s), build_quadratures(s))
    }

    #[test]
    fn identity_has_zero_objective() {
        for n in [1, 3, 9] {
            let (b, q) = setup(n);
            assert_eq!(objective_s(&b, &q).unwrap(), 0.0);
        }
    }

    #[test]
    fn identity_mean_variance() {
        let (b, q) = setup(3);
        assert_abs_diff_eq!(mean_variance(&b, &q).unwrap(), 3.0, epsilon = 1e-14);
        let (b, q) = setup(4);
        assert_abs_diff_eq!(mean_variance(&b, &q).unwrap(), 4.0, epsilon = 1e-14);
        let (b, q) = setup(1);
        assert_eq!(mean_variance(&b, &q).unwrap(), 1.0);
    }

    #[test]
    fn identity_moments_are_level_energies() {
        let (b, q) = setup(5);
        let m = QuadratureMoments::compute(&b, &q);
        for (n, st) in m.states.iter().enumerate() {
            assert_eq!(st.dx2(), n as f64 + 0.5);
            assert_eq!(st.dp2(), n as f64 + 0.5);
        }
        assert_abs_diff_eq!(m.min_uncertainty_product(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn phase_on_single_state_is_trivial() {
        let s = build_space(1).unwrap();
        let q = build_quadratures::<f64>(s);
        let c = CMatrix::from_fn(1, 1, |_, _| Complex::from_polar(1.0, 0.7));
        let b = LocalizedBasis::from_coeffs(s, c).unwrap();
        assert_eq!(mean_variance(&b, &q).unwrap(), 1.0);
    }

    #[test]
    fn symmetric_pair_objective() {
        // rows (|0> + |1>)/sqrt2 and (|0> - |1>)/sqrt2: <x> = +-1/sqrt2, <p> = 0
        let s = build_space(2).unwrap();
        let q = build_quadratures::<f64>(s);
        let h = 0.5f64.sqrt();
        let c = CMatrix::from_row_major(
            2,
            2,
            vec![
                Complex::new(h, 0.0),
                Complex::new(h, 0.0),
                Complex::new(h, 0.0),
                Complex::new(-h, 0.0),
            ],
        )
        .unwrap();
        let b = LocalizedBasis::from_coeffs(s, c).unwrap();
        assert_abs_diff_eq!(objective_s(&b, &q).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mean_variance(&b, &q).unwrap(), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn corrupted_basis_is_rejected() {
        let s = build_space(2).unwrap();
        let q = build_quadratures::<f64>(s);
        // a non-normalized row can still give a real <x>; breaking Hermitian
        // symmetry of the operator instead makes the residue visible
        let mut bad_q = q.clone();
        bad_q.x_mat[(0, 1)] = Complex::new(0.0, 1.0);
        let c = CMatrix::from_row_major(
            2,
            2,
            vec![
                Complex::new(0.6, 0.0),
                Complex::new(0.8, 0.0),
                Complex::new(0.8, 0.0),
                Complex::new(-0.6, 0.0),
            ],
        )
        .unwrap();
        let b = LocalizedBasis::from_coeffs(s, c).unwrap();
        assert!(matches!(objective_s(&b, &bad_q), Err(Error::ImaginaryResidue { .. })));
        assert!(objective_s(&b, &q).is_ok());
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let s = build_space(3).unwrap();
        assert!(LocalizedBasis::<f64>::from_coeffs(s, CMatrix::identity(2)).is_err());
    }
}
