//! Statistics of localized bases: energy spread, curve fits, position-space
//! profiles and their power-law tails.

use serde::{Deserialize, Serialize};

use crate::basis::{LocalizedBasis, QuadratureMoments};
use crate::error::{Error, Result};
use crate::oscillator::{eval_eigenfunctions, trapezoid, QuadratureMatrices};
use crate::Real;

/// Energy mean and variance of every basis state. `H` is diagonal in the
/// oscillator basis, so both follow from `|U_{n,k}|^2` alone.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyStats<T> {
    pub mean_e: Vec<T>,
    pub de2: Vec<T>,
    pub avg_de2: T,
}

impl<T: Real> EnergyStats<T> {
    pub fn total_mean_energy(&self) -> T {
        self.mean_e.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn avg_mean_energy(&self) -> T {
        self.total_mean_energy() / T::from_usize_lossy(self.mean_e.len())
    }

    /// `sqrt(avg dE^2) / avg E`.
    pub fn relative_spread(&self) -> T {
        self.avg_de2.sqrt() / self.avg_mean_energy()
    }
}

pub fn energy_stats<T: Real>(basis: &LocalizedBasis<T>) -> EnergyStats<T> {
    let n = basis.dim();
    let energies = basis.space().energies::<T>();
    let mut mean_e = Vec::with_capacity(n);
    let mut de2 = Vec::with_capacity(n);
    for row in 0..n {
        let (mut m1, mut m2) = (T::zero(), T::zero());
        for (c, &e) in basis.row(row).iter().zip(&energies) {
            let w = c.norm_sqr();
            m1 = m1 + w * e;
            m2 = m2 + w * e * e;
        }
        mean_e.push(m1);
        // clamp rounding noise on exact eigenstates
        de2.push((m2 - m1 * m1).max(T::zero()));
    }
    let avg_de2 = de2.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(n);
    EnergyStats { mean_e, de2, avg_de2 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = a + b ln N`
    Log,
    /// `y = c N^e`
    Power,
}

/// Least-squares fit of one of the two models.
///
/// For `Log`, `coefficients = [a, b]` and the residual is in `y`. For
/// `Power`, `coefficients = [c, e]` and the residual is in `ln y`, the
/// space the regression is carried out in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: [f64; 2],
    pub residual_rms: f64,
    pub n_values: Vec<f64>,
}

impl FitResult {
    pub fn evaluate(&self, n: f64) -> f64 {
        let [p, q] = self.coefficients;
        match self.model {
            FitModel::Log => p + q * n.ln(),
            FitModel::Power => p * n.powf(q),
        }
    }

    /// Slope `b` for the log model, exponent `e` for the power model.
    pub fn rate(&self) -> f64 {
        self.coefficients[1]
    }
}

const MIN_FIT_POINTS: usize = 3;

/// Ordinary least squares `v = p + q u`; returns `(p, q, rms residual)`.
fn linear_regression<T: Real>(u: &[T], v: &[T]) -> Result<(T, T, T)> {
    let m = T::from_usize_lossy(u.len());
    let mu = u.iter().fold(T::zero(), |a, &b| a + b) / m;
    let mv = v.iter().fold(T::zero(), |a, &b| a + b) / m;
    let (mut suu, mut suv) = (T::zero(), T::zero());
    for (&x, &y) in u.iter().zip(v) {
        suu = suu + (x - mu) * (x - mu);
        suv = suv + (x - mu) * (y - mv);
    }
    let scale = u.iter().fold(T::zero(), |a, &b| a.max(b.abs())).max(T::one());
    if suu <= T::epsilon() * scale * scale * m {
        return Err(Error::RankDeficient);
    }
    let q = suv / suu;
    let p = mv - q * mu;
    let sse = u
        .iter()
        .zip(v)
        .fold(T::zero(), |a, (&x, &y)| a + (y - p - q * x).powi(2));
    Ok((p, q, (sse / m).sqrt()))
}

fn check_points<T: Real>(points: &[(T, T)]) -> Result<()> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            got: points.len(),
            need: MIN_FIT_POINTS,
        });
    }
    for (index, &(n, y)) in points.iter().enumerate() {
        if !(n >= T::one()) || !n.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "N at index {index} must be a finite value >= 1"
            )));
        }
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!("y at index {index} is not finite")));
        }
    }
    Ok(())
}

/// Fits `y = a + b ln N`.
pub fn fit_log<T: Real>(points: &[(T, T)]) -> Result<FitResult> {
    check_points(points)?;
    let u: Vec<T> = points.iter().map(|p| p.0.ln()).collect();
    let v: Vec<T> = points.iter().map(|p| p.1).collect();
    let (a, b, rms) = linear_regression(&u, &v)?;
    Ok(FitResult {
        model: FitModel::Log,
        coefficients: [a.to_f64_lossy(), b.to_f64_lossy()],
        residual_rms: rms.to_f64_lossy(),
        n_values: points.iter().map(|p| p.0.to_f64_lossy()).collect(),
    })
}

/// Fits `y = c N^e` by regressing `ln y` on `ln N`.
pub fn fit_power<T: Real>(points: &[(T, T)]) -> Result<FitResult> {
    check_points(points)?;
    if let Some(index) = points.iter().position(|p| !(p.1 > T::zero())) {
        return Err(Error::NonPositive {
            index,
            value: points[index].1.to_f64_lossy(),
        });
    }
    let u: Vec<T> = points.iter().map(|p| p.0.ln()).collect();
    let v: Vec<T> = points.iter().map(|p| p.1.ln()).collect();
    let (ln_c, e, rms) = linear_regression(&u, &v)?;
    Ok(FitResult {
        model: FitModel::Power,
        coefficients: [ln_c.exp().to_f64_lossy(), e.to_f64_lossy()],
        residual_rms: rms.to_f64_lossy(),
        n_values: points.iter().map(|p| p.0.to_f64_lossy()).collect(),
    })
}

/// `|psi_n(x)|^2` for every basis state on a shared grid.
///
/// The Hermite table is computed once; each profile is checked to
/// integrate to one within `1e-2`.
pub fn position_profiles<T: Real>(basis: &LocalizedBasis<T>, grid: &[T]) -> Result<Vec<Vec<T>>> {
    let table = eval_eigenfunctions(basis.space(), grid)?;
    (0..basis.dim())
        .map(|n| profile_from_table(basis, n, &table, grid))
        .collect()
}

pub fn position_profile<T: Real>(basis: &LocalizedBasis<T>, state: usize, grid: &[T]) -> Result<Vec<T>> {
    if state >= basis.dim() {
        return Err(Error::InvalidArgument(format!(
            "state {state} out of range for dimension {}",
            basis.dim()
        )));
    }
    let table = eval_eigenfunctions(basis.space(), grid)?;
    profile_from_table(basis, state, &table, grid)
}

fn profile_from_table<T: Real>(
    basis: &LocalizedBasis<T>,
    state: usize,
    table: &[Vec<T>],
    grid: &[T],
) -> Result<Vec<T>> {
    let row = basis.row(state);
    let profile: Vec<T> = (0..grid.len())
        .map(|i| {
            let (mut re, mut im) = (T::zero(), T::zero());
            for (c, phi) in row.iter().zip(table) {
                re = re + c.re * phi[i];
                im = im + c.im * phi[i];
            }
            re * re + im * im
        })
        .collect();
    let integral = trapezoid(grid, &profile);
    if (integral - T::one()).abs() > T::lit(1e-2) {
        return Err(Error::Normalization {
            integral: integral.to_f64_lossy(),
        });
    }
    Ok(profile)
}

/// Power-law fit `|psi| ~ A r^nu` of a profile tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub state: usize,
    /// Window in distance from the fit origin.
    pub window: (f64, f64),
    pub nu: f64,
    pub amplitude: f64,
    /// RMS residual of `ln |psi|`.
    pub residual_rms: f64,
    /// Set when the residual is too large for the tail to count as a power law.
    pub poor_fit: bool,
    pub points: usize,
}

/// Residual above which a tail is flagged as not power-law.
pub const TAIL_RESIDUAL_FLAG: f64 = 0.25;
pub const MIN_TAIL_POINTS: usize = 8;

/// Fits `ln sqrt(profile) = ln A + nu ln r` over grid points whose distance
/// `r = |x - origin|` lies in `window`, on the side given by `direction`
/// (`+1` or `-1`).
pub fn fit_tail<T: Real>(
    grid: &[T],
    profile: &[T],
    origin: T,
    direction: T,
    window: (T, T),
    state: usize,
) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo > T::zero() && lo < hi) {
        return Err(Error::InvalidWindow(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if grid.len() != profile.len() {
        return Err(Error::InvalidArgument("grid and profile lengths differ".into()));
    }
    let (gmin, gmax) = (grid[0], grid[grid.len() - 1]);
    let far = origin + direction * hi;
    let near = origin + direction * lo;
    if far < gmin || far > gmax || near < gmin || near > gmax {
        return Err(Error::InvalidWindow(format!(
            "window [{lo}, {hi}] from {origin} leaves the grid [{gmin}, {gmax}]"
        )));
    }
    let mut u = Vec::new();
    let mut v = Vec::new();
    for (&x, &w) in grid.iter().zip(profile) {
        let r = (x - origin) * direction;
        if r >= lo && r <= hi {
            if !(w > T::zero()) {
                return Err(Error::InvalidWindow(format!("profile vanishes at x = {x}")));
            }
            u.push(r.ln());
            v.push(w.sqrt().ln());
        }
    }
    if u.len() < MIN_TAIL_POINTS {
        return Err(Error::InvalidWindow(format!(
            "window holds {} grid points, need at least {MIN_TAIL_POINTS}",
            u.len()
        )));
    }
    let (ln_a, nu, rms) = linear_regression(&u, &v)?;
    let rms = rms.to_f64_lossy();
    Ok(TailFit {
        state,
        window: (lo.to_f64_lossy(), hi.to_f64_lossy()),
        nu: nu.to_f64_lossy(),
        amplitude: ln_a.exp().to_f64_lossy(),
        residual_rms: rms,
        poor_fit: rms > TAIL_RESIDUAL_FLAG,
        points: u.len(),
    })
}

/// Default tail window for a state centred at `center`, fitted towards the
/// origin of phase space (the side with more room before the Gaussian
/// cut-off): `[max(3, r0), 0.8 sqrt(2N)]`, where `r0` is the distance to the
/// first local minimum of the profile beyond the centre. The upper end is
/// clipped to the grid.
pub fn default_tail_window<T: Real>(grid: &[T], profile: &[T], center: T, dim: usize) -> Option<(T, T, T)> {
    let direction = if center > T::zero() { -T::one() } else { T::one() };
    let start = grid.iter().position(|&x| x >= center)?;
    let mut r0 = None;
    let mut prev: Option<T> = None;
    let mut i = start as isize;
    while i >= 0 && (i as usize) < grid.len() {
        let w = profile[i as usize];
        if let Some(p) = prev {
            if w > p {
                r0 = Some(((grid[i as usize] - center) * direction).abs());
                break;
            }
        }
        prev = Some(w);
        i += if direction > T::zero() { 1 } else { -1 };
    }
    let lo = T::lit(3.0).max(r0.unwrap_or(T::zero()));
    let edge = if direction > T::zero() {
        grid[grid.len() - 1] - center
    } else {
        center - grid[0]
    };
    let hi = (T::lit(0.8) * T::from_usize_lossy(2 * dim).sqrt()).min(edge);
    (lo < hi).then_some((lo, hi, direction))
}

/// Median and interquartile range of the fitted exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub median_nu: f64,
    pub q1_nu: f64,
    pub q3_nu: f64,
    pub fitted_states: usize,
    pub skipped_states: usize,
    pub fits: Vec<TailFit>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Fits every state's tail with the default window.
pub fn tail_summary<T: Real>(
    basis: &LocalizedBasis<T>,
    quads: &QuadratureMatrices<T>,
    grid: &[T],
) -> Result<TailSummary> {
    let profiles = position_profiles(basis, grid)?;
    let moments = QuadratureMoments::compute(basis, quads);
    let mut fits = Vec::new();
    let mut skipped = 0;
    for (n, profile) in profiles.iter().enumerate() {
        let center = moments.states[n].mean_x;
        let fit = default_tail_window(grid, profile, center, basis.dim())
            .and_then(|(lo, hi, dir)| fit_tail(grid, profile, center, dir, (lo, hi), n).ok());
        match fit {
            Some(f) => fits.push(f),
            None => skipped += 1,
        }
    }
    if fits.is_empty() {
        return Err(Error::InvalidWindow("no state admits a tail window".into()));
    }
    let mut nus: Vec<f64> = fits.iter().map(|f| f.nu).collect();
    nus.sort_by(f64::total_cmp);
    Ok(TailSummary {
        median_nu: quantile(&nus, 0.5),
        q1_nu: quantile(&nus, 0.25),
        q3_nu: quantile(&nus, 0.75),
        fitted_states: fits.len(),
        skipped_states: skipped,
        fits,
    })
}

/// Basis-averaged central fourth moment `<(x - <x>)^4>` by quadrature.
pub fn mean_fourth_moment<T: Real>(basis: &LocalizedBasis<T>, quads: &QuadratureMatrices<T>, grid: &[T]) -> Result<T> {
    let profiles = position_profiles(basis, grid)?;
    let moments = QuadratureMoments::compute(basis, quads);
    let mut total = T::zero();
    for (profile, m) in profiles.iter().zip(&moments.states) {
        let integrand: Vec<T> = grid
            .iter()
            .zip(profile)
            .map(|(&x, &w)| w * (x - m.mean_x).powi(4))
            .collect();
        total = total + trapezoid(grid, &integrand);
    }
    Ok(total / T::from_usize_lossy(basis.dim()))
}

/// Number of Planck cells `N = V / (2 pi hbar)` in a phase-space volume, and
/// the corresponding localized-state width `sqrt(0.5 + 0.3 ln N)` in units of
/// the minimal packet.
pub fn localization_estimate(phase_space_volume: f64, hbar: f64) -> Result<(f64, f64)> {
    if !(phase_space_volume > 0.0 && phase_space_volume.is_finite()) {
        return Err(Error::InvalidArgument("phase-space volume must be positive".into()));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::InvalidArgument("hbar must be positive".into()));
    }
    let n = phase_space_volume / (std::f64::consts::TAU * hbar);
    let arg = 0.5 + 0.3 * n.ln();
    if arg < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "volume is {n:e} Planck cells; width undefined below exp(-5/3)"
        )));
    }
    Ok((n, arg.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::init_identity;
    use crate::matrix::CMatrix;
    use crate::optimizer::{random_unitary, seeded_rng};
    use crate::oscillator::{build_quadratures, build_space, uniform_grid};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex;

    fn pair_basis() -> LocalizedBasis<f64> {
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
        LocalizedBasis::from_coeffs(build_space(2).unwrap(), c).unwrap()
    }

    #[test]
    fn identity_has_sharp_energies() {
        let b = init_identity::<f64>(build_space(7).unwrap());
        let st = energy_stats(&b);
        assert!(st.de2.iter().all(|&d| d == 0.0));
        assert_eq!(st.avg_de2, 0.0);
        assert_eq!(st.total_mean_energy(), 49.0 / 2.0);
    }

    #[test]
    fn symmetric_pair_energy() {
        let st = energy_stats(&pair_basis());
        assert_abs_diff_eq!(st.mean_e[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.de2[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn energy_trace_is_invariant() {
        for n in [2, 8, 32] {
            let b = random_unitary::<f64>(build_space(n).unwrap(), &mut seeded_rng(n as u64));
            let st = energy_stats(&b);
            assert_abs_diff_eq!(st.total_mean_energy(), (n * n) as f64 / 2.0, epsilon = 1e-9);
            assert!(st.de2.iter().all(|&d| d >= 0.0));
        }
    }

    #[test]
    fn log_fit_recovers_model() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&n: &f64| (n, 1.0 + 0.6 * n.ln()))
            .collect();
        let f = fit_log(&pts).unwrap();
        assert_abs_diff_eq!(f.coefficients[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.coefficients[1], 0.6, epsilon = 1e-10);
        assert!(f.residual_rms < 1e-10);
        assert_eq!(f.n_values, vec![2.0, 4.0, 8.0, 16.0]);

        let flat = fit_log(&[(1.0, 5.0), (3.0, 5.0), (9.0, 5.0)]).unwrap();
        assert_abs_diff_eq!(flat.coefficients[0], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(flat.coefficients[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn power_fit_recovers_model() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0, 64.0]
            .iter()
            .map(|&n: &f64| (n, 0.44 * n.powf(1.25)))
            .collect();
        let f = fit_power(&pts).unwrap();
        assert_abs_diff_eq!(f.coefficients[0], 0.44, epsilon = 1e-10);
        assert_abs_diff_eq!(f.coefficients[1], 1.25, epsilon = 1e-10);
        assert!(f.residual_rms < 1e-10);
        assert_abs_diff_eq!(f.evaluate(10.0), 0.44 * 10f64.powf(1.25), epsilon = 1e-9);

        let flat = fit_power(&[(2.0, 3.0), (5.0, 3.0), (7.0, 3.0)]).unwrap();
        assert_abs_diff_eq!(flat.coefficients[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_log(&[(2.0, 1.0), (4.0, 2.0)]),
            Err(Error::TooFewPoints { got: 2, need: 3 })
        ));
        assert!(matches!(
            fit_log(&[(4.0, 1.0), (4.0, 2.0), (4.0, 3.0)]),
            Err(Error::RankDeficient)
        ));
        assert!(matches!(
            fit_power(&[(2.0, 1.0), (4.0, 0.0), (8.0, 3.0)]),
            Err(Error::NonPositive { index: 1, .. })
        ));
        assert!(fit_log(&[(0.5, 1.0), (4.0, 2.0), (8.0, 3.0)]).is_err());
        assert!(fit_log(&[(2.0, f64::NAN), (4.0, 2.0), (8.0, 3.0)]).is_err());
    }

    #[test]
    fn ground_state_profile_is_gaussian() {
        let s = build_space(3).unwrap();
        let b = init_identity::<f64>(s);
        let grid = uniform_grid(-8.0f64, 8.0, 1601);
        let prof = position_profile(&b, 0, &grid).unwrap();
        for (&x, &w) in grid.iter().zip(&prof) {
            assert_abs_diff_eq!(w, (-x * x).exp() / std::f64::consts::PI.sqrt(), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(trapezoid(&grid, &prof), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn parity_mixed_state_at_origin() {
        let b = pair_basis();
        let prof = position_profile(&b, 0, &[-1.0, 0.0, 1.0]);
        // a three-point grid cannot integrate to one
        assert!(matches!(prof, Err(Error::Normalization { .. })));
        let grid = uniform_grid(-10.0, 10.0, 2001);
        let prof = position_profile(&b, 0, &grid).unwrap();
        let phi0 = std::f64::consts::PI.powf(-0.25);
        assert_abs_diff_eq!(prof[1000], phi0 * phi0 / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn profile_rejects_bad_state() {
        let b = init_identity::<f64>(build_space(2).unwrap());
        assert!(position_profile(&b, 2, &[0.0]).is_err());
    }

    #[test]
    fn tail_fit_recovers_power_law() {
        let grid = uniform_grid(0.0f64, 20.0, 2001);
        let prof: Vec<f64> = grid.iter().map(|&x| if x > 0.0 { x.powf(-3.0) } else { 1.0 }).collect();
        let f = fit_tail(&grid, &prof, 0.0, 1.0, (2.0, 15.0), 0).unwrap();
        assert_abs_diff_eq!(f.nu, -1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(f.amplitude, 1.0, epsilon = 1e-10);
        assert!(!f.poor_fit);
    }

    #[test]
    fn tail_fit_mirrored_direction() {
        let grid = uniform_grid(-20.0f64, 5.0, 2501);
        let prof: Vec<f64> = grid.iter().map(|&x| 4.0 * (3.0 - x).abs().powf(-2.4)).collect();
        let f = fit_tail(&grid, &prof, 3.0, -1.0, (1.0, 20.0), 4).unwrap();
        assert_abs_diff_eq!(f.nu, -1.2, epsilon = 1e-10);
        assert_abs_diff_eq!(f.amplitude, 2.0, epsilon = 1e-10);
        assert_eq!(f.state, 4);
    }

    #[test]
    fn gaussian_tail_is_flagged() {
        let grid = uniform_grid(-8.0f64, 8.0, 1601);
        let prof: Vec<f64> = grid
            .iter()
            .map(|&x| (-x * x).exp() / std::f64::consts::PI.sqrt())
            .collect();
        let f = fit_tail(&grid, &prof, 0.0, 1.0, (2.0, 4.0), 0).unwrap();
        // oracle: regress ln(pi^-1/4 e^{-x^2/2}) on ln x directly
        let pts: Vec<(f64, f64)> = grid
            .iter()
            .filter(|&&x| (2.0..=4.0).contains(&x))
            .map(|&x| (x.ln(), -0.25 * std::f64::consts::PI.ln() - x * x / 2.0))
            .collect();
        let m = pts.len() as f64;
        let mu = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let mv = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let slope = pts.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mu).powi(2)).sum::<f64>();
        assert_abs_diff_eq!(f.nu, slope, epsilon = 1e-9);
        assert!(f.nu < -5.0);
        assert!(f.poor_fit);
    }

    #[test]
    fn tail_window_errors() {
        let grid = uniform_grid(0.0f64, 10.0, 101);
        let prof = vec![1.0; 101];
        assert!(fit_tail(&grid, &prof, 0.0, 1.0, (3.0, 2.0), 0).is_err());
        assert!(fit_tail(&grid, &prof, 0.0, 1.0, (1.0, 12.0), 0).is_err());
        // 0.1 spacing: [1, 1.5] holds 6 points
        assert!(matches!(
            fit_tail(&grid, &prof, 0.0, 1.0, (1.0, 1.5), 0),
            Err(Error::InvalidWindow(_))
        ));
        let mut holes = prof.clone();
        holes[30] = 0.0;
        assert!(fit_tail(&grid, &holes, 0.0, 1.0, (1.0, 5.0), 0).is_err());
    }

    #[test]
    fn earth_estimate() {
        let (n, w) = localization_estimate(3e11 * 3.6e29, 1.0546e-34).unwrap();
        assert!((1.4e74..=1.8e74).contains(&n));
        assert_abs_diff_eq!(w, 7.2, epsilon = 0.1);
    }

    #[test]
    fn estimate_at_one_cell() {
        let h = 2.0 * std::f64::consts::PI;
        let (n, w) = localization_estimate(h, 1.0).unwrap();
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w, 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(localization_estimate(0.0, 1.0).is_err());
        assert!(localization_estimate(1.0, -1.0).is_err());
    }

    #[test]
    fn estimate_width_ratio() {
        let hbar = 1.0;
        let n1: f64 = 1e6;
        let (_, w1) = localization_estimate(n1 * std::f64::consts::TAU, hbar).unwrap();
        let (_, w2) = localization_estimate(n1 * n1 * std::f64::consts::TAU, hbar).unwrap();
        let expect = ((0.5 + 0.3 * n1.ln()) / (0.5 + 0.6 * n1.ln())).sqrt();
        assert_abs_diff_eq!(w1 / w2, expect, epsilon = 1e-12);
    }

    #[test]
    fn fourth_moment_of_eigenstates() {
        // <n|x^4|n> = (6n^2 + 6n + 3)/4
        let s = build_space(4).unwrap();
        let b = init_identity::<f64>(s);
        let q = build_quadratures(s);
        let grid = uniform_grid(-12.0, 12.0, 4801);
        let m4 = mean_fourth_moment(&b, &q, &grid).unwrap();
        let exact = (0..4).map(|n| (6 * n * n + 6 * n + 3) as f64 / 4.0).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(m4, exact, epsilon = 1e-8);
    }
}
