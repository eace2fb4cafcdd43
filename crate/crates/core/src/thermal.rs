//! Thermal ensembles built from localized states, their band structure in
//! the energy representation, and the linear response of `<H_0>` to a
//! static perturbation.

use std::f64::consts::TAU;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analysis::energy_stats;
use crate::basis::LocalizedBasis;
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::oscillator::{QuadratureMatrices, TruncatedSpace};
use crate::Real;

/// Mixture `rho = sum_n p_n |phi_n><phi_n|` written in the oscillator basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalEnsemble<T> {
    pub beta: T,
    pub probs: Vec<T>,
    pub rho: CMatrix<T>,
    space: TruncatedSpace,
}

impl<T: Real> ThermalEnsemble<T> {
    /// Mixes the basis states with the given weights. The weights must be
    /// non-negative; they are normalized here.
    pub fn from_probabilities(basis: &LocalizedBasis<T>, beta: T, weights: &[T]) -> Result<Self> {
        let n = basis.dim();
        if weights.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {n} states",
                weights.len()
            )));
        }
        if let Some(index) = weights.iter().position(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight {index} is negative or not finite"
            )));
        }
        let total = weights.iter().fold(T::zero(), |a, &b| a + b);
        if !(total > T::zero()) {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        let probs: Vec<T> = weights.iter().map(|&w| w / total).collect();
        // rho_{jk} = sum_n p_n U_{nj} conj(U_{nk})
        let mut rho = CMatrix::zeros(n, n);
        for (state, &p) in probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let row = basis.row(state);
            for j in 0..n {
                let a = row[j].scale(p);
                for k in 0..n {
                    rho[(j, k)] = rho[(j, k)] + a * row[k].conj();
                }
            }
        }
        Ok(Self {
            beta,
            probs,
            rho,
            space: basis.space(),
        })
    }

    pub fn space(&self) -> TruncatedSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> Complex<T> {
        self.rho.trace()
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> T {
        self.rho.frobenius_norm_sqr()
    }

    /// Smallest eigenvalue of `rho`, via the real symmetric embedding
    /// `[[Re, -Im], [Im, Re]]` (each eigenvalue appears twice).
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        let emb = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = self.rho[(i % n, j % n)];
            let (re, im) = (z.re.to_f64_lossy(), z.im.to_f64_lossy());
            match (i < n, j < n) {
                (true, true) | (false, false) => re,
                (true, false) => -im,
                (false, true) => im,
            }
        });
        nalgebra::SymmetricEigen::new(emb).eigenvalues.min()
    }
}

/// Boltzmann weights over the localized states, using each state's mean
/// energy: `p_n ~ exp(-beta <E>_n)`.
pub fn build_ensemble<T: Real>(basis: &LocalizedBasis<T>, beta: T) -> Result<ThermalEnsemble<T>> {
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let stats = energy_stats(basis);
    let shift = stats.mean_e.iter().fold(T::infinity(), |m, &e| m.min(e));
    let weights: Vec<T> = stats.mean_e.iter().map(|&e| (-(beta * (e - shift))).exp()).collect();
    ThermalEnsemble::from_probabilities(basis, beta, &weights)
}

/// `exp(-beta H) / Z`, diagonal in the oscillator basis.
pub fn canonical_ensemble<T: Real>(space: TruncatedSpace, beta: T) -> Result<ThermalEnsemble<T>> {
    build_ensemble(&LocalizedBasis::identity(space), beta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandProfile {
    /// `w_d = sum_{|j-k|=d} |rho_jk|^2`.
    pub band_weight: Vec<f64>,
    /// Smallest `d` holding 99% of the total weight.
    pub effective_bandwidth: usize,
}

impl BandProfile {
    pub fn total(&self) -> f64 {
        self.band_weight.iter().sum()
    }
}

pub const BANDWIDTH_FRACTION: f64 = 0.99;

pub fn band_profile<T: Real>(ens: &ThermalEnsemble<T>) -> BandProfile {
    let n = ens.dim();
    let mut band_weight = vec![0.0; n];
    for j in 0..n {
        for k in 0..n {
            band_weight[j.abs_diff(k)] += ens.rho[(j, k)].norm_sqr().to_f64_lossy();
        }
    }
    let effective_bandwidth = bandwidth_of(&band_weight);
    BandProfile {
        band_weight,
        effective_bandwidth,
    }
}

fn bandwidth_of(weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let target = BANDWIDTH_FRACTION * total;
    let mut acc = 0.0;
    for (d, w) in weights.iter().enumerate() {
        acc += w;
        if acc >= target {
            return d;
        }
    }
    weights.len().saturating_sub(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseSeries {
    pub times: Vec<f64>,
    /// `delta <H_0>(t)`.
    pub values: Vec<f64>,
    /// Largest imaginary part discarded from `values`.
    pub max_imag: f64,
    /// DFT magnitudes; bin `f` is angular frequency `2 pi f / (n dt)`.
    pub spectrum: Vec<f64>,
    /// Angular frequency of DFT bin 1.
    pub frequency_step: f64,
    pub perturbation: String,
}

impl ResponseSeries {
    /// Angular frequency of a DFT bin.
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.frequency_step
    }
}

/// Default coupling strength of the dipole perturbation `lambda x`.
pub const DEFAULT_COUPLING: f64 = 0.1;
pub const DEFAULT_TIME_POINTS: usize = 1024;

/// `lambda x` on the truncated space.
pub fn dipole_perturbation<T: Real>(quads: &QuadratureMatrices<T>, coupling: T) -> CMatrix<T> {
    quads.x_mat.scale(Complex::new(coupling, T::zero()))
}

/// `points` uniform times covering one revival period `[0, 2 pi)`.
pub fn revival_times<T: Real>(points: usize) -> Vec<T> {
    (0..points).map(|k| T::lit(TAU * k as f64 / points as f64)).collect()
}

/// `sum_{jk} (exp(-i (E_k - E_j) t) - 1) rho_jk (h1)_kj` at a single time.
pub fn response_at<T: Real>(ens: &ThermalEnsemble<T>, h1: &CMatrix<T>, t: T) -> Complex<T> {
    let n = ens.dim();
    let mut acc = Complex::zero();
    for j in 0..n {
        for k in 0..n {
            let coupling = ens.rho[(j, k)] * h1[(k, j)];
            if coupling.is_zero() {
                continue;
            }
            // E_k - E_j = k - j
            let phase = -(T::from_usize_lossy(k) - T::from_usize_lossy(j)) * t;
            let factor = Complex::new(phase.cos() - T::one(), phase.sin());
            acc = acc + factor * coupling;
        }
    }
    acc
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument("need at least two time points".into()));
    }
    if !times[0].is_zero() {
        return Err(Error::InvalidArgument("time grid must start at 0".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument("time grid must be increasing".into()));
    }
    let tol = T::tolerance(1e-9, 1e3) * dt.max(T::one()) * T::from_usize_lossy(times.len());
    for (k, &t) in times.iter().enumerate() {
        if (t - dt * T::from_usize_lossy(k)).abs() > tol {
            return Err(Error::InvalidArgument(format!("time grid is not uniform at index {k}")));
        }
    }
    Ok(())
}

/// Linear response of `<H_0>` and the magnitude of its DFT.
pub fn response<T: Real>(ens: &ThermalEnsemble<T>, h1: &CMatrix<T>, times: &[T]) -> Result<ResponseSeries> {
    let n = ens.dim();
    if h1.rows() != n || h1.cols() != n {
        return Err(Error::InvalidArgument(format!("perturbation must be {n}x{n}")));
    }
    let residue = h1.hermiticity_residual();
    if residue > T::tolerance(1e-10, 64.0) {
        return Err(Error::NotHermitian {
            residue: residue.to_f64_lossy(),
        });
    }
    check_times(times)?;
    let raw: Vec<Complex<T>> = times.iter().map(|&t| response_at(ens, h1, t)).collect();
    let max_imag = raw.iter().fold(T::zero(), |m, z| m.max(z.im.abs())).to_f64_lossy();
    let values: Vec<T> = raw.iter().map(|z| z.re).collect();

    let mut buffer: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(buffer.len()).process(&mut buffer);
    let spectrum = buffer.iter().map(|z| z.norm().to_f64_lossy()).collect();

    let dt = (times[1] - times[0]).to_f64_lossy();
    Ok(ResponseSeries {
        times: times.iter().map(|t| t.to_f64_lossy()).collect(),
        values: values.iter().map(|v| v.to_f64_lossy()).collect(),
        max_imag,
        spectrum,
        frequency_step: TAU / (dt * times.len() as f64),
        perturbation: String::new(),
    })
}

/// Response to the default dipole perturbation over one revival period.
pub fn default_response<T: Real>(ens: &ThermalEnsemble<T>, quads: &QuadratureMatrices<T>) -> Result<ResponseSeries> {
    let h1 = dipole_perturbation(quads, T::lit(DEFAULT_COUPLING));
    let mut series = response(ens, &h1, &revival_times::<T>(DEFAULT_TIME_POINTS))?;
    series.perturbation = format!("dipole: H1 = {DEFAULT_COUPLING} x");
    Ok(series)
}

/// Spectral weight in the lowest and highest quarter of the transition
/// band `1..=max_bin` (the static DC bin is excluded).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuartileWeights {
    pub low: f64,
    pub high: f64,
    pub max_bin: usize,
}

pub fn quartile_weights(series: &ResponseSeries, max_bin: usize) -> Result<QuartileWeights> {
    if max_bin < 4 || max_bin > series.spectrum.len() / 2 {
        return Err(Error::InvalidArgument(format!(
            "transition band 1..={max_bin} must hold at least 4 bins below Nyquist"
        )));
    }
    let quarter = max_bin / 4;
    let low = series.spectrum[1..=quarter].iter().sum();
    let high = series.spectrum[max_bin + 1 - quarter..=max_bin].iter().sum();
    Ok(QuartileWeights { low, high, max_bin })
}

/// Highest transition frequency `E_{N-1} - E_0` as a DFT bin index.
pub fn transition_band(series: &ResponseSeries, dim: usize) -> usize {
    ((dim.saturating_sub(1)) as f64 / series.frequency_step).round() as usize
}

/// Overlaps `|<v_n|phi_n^l>|` between the leading eigenvectors of the
/// discretized kernel `exp(-(x-x')^2/2 s1^2 - (x+x')^2/2 s2^2)` and
/// oscillator eigenfunctions of length `l = sqrt(s1 s2 / 2)`.
///
/// The kernel is nearly diagonal in both position and momentum when
/// `s1 << s2`, yet its eigenvectors are delocalized oscillator states.
pub fn kernel_eigen_overlaps(sigma1: f64, sigma2: f64, grid: &[f64], levels: usize) -> Result<Vec<f64>> {
    if !(sigma1 > 0.0 && sigma2 > sigma1) {
        return Err(Error::InvalidArgument("need 0 < sigma1 < sigma2".into()));
    }
    if grid.len() < 2 {
        return Err(Error::EmptyGrid);
    }
    let m = grid.len();
    let dx = grid[1] - grid[0];
    let kernel = nalgebra::DMatrix::from_fn(m, m, |i, j| {
        let (x, y) = (grid[i], grid[j]);
        (-(x - y).powi(2) / (2.0 * sigma1 * sigma1) - (x + y).powi(2) / (2.0 * sigma2 * sigma2)).exp() * dx
    });
    let eig = nalgebra::SymmetricEigen::new(kernel);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let length = (sigma1 * sigma2 / 2.0).sqrt();
    let scaled: Vec<f64> = grid.iter().map(|x| x / length).collect();
    let space = TruncatedSpace::new(levels)?;
    let table = crate::oscillator::eval_eigenfunctions(space, &scaled)?;
    let norm = (dx / length).sqrt();
    Ok((0..levels)
        .map(|n| {
            let v = eig.eigenvectors.column(order[n]);
            let dot: f64 = v.iter().zip(&table[n]).map(|(a, b)| a * b * norm).sum();
            dot.abs()
        })
        .collect())
}
