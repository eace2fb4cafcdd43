//! Greedy Monte-Carlo search for a maximally localized basis.
//!
//! Each proposal is a random unitary 2x2 block acting on two rows of the
//! coefficient matrix. A proposal is kept only if it increases
//! `S = sum_n <x>_n^2 + <p>_n^2`; because `sum_n <x^2 + p^2>_n` is fixed,
//! this is the same as decreasing the total phase-space variance.

use std::f64::consts::TAU;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{mean_variance, objective_s, LocalizedBasis};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::oscillator::{QuadratureMatrices, TruncatedSpace};
use crate::Real;

/// Proposal RNG. ChaCha gives the same stream on every platform.
pub type ProposalRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ProposalRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationProposal<T> {
    pub row_a: usize,
    pub row_b: usize,
    pub theta: T,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> RotationProposal<T> {
    pub fn new(row_a: usize, row_b: usize, theta: T, alpha: T, beta: T) -> Result<Self> {
        if row_a == row_b {
            return Err(Error::InvalidArgument(format!(
                "rotation rows must differ, got {row_a} twice"
            )));
        }
        Ok(Self {
            row_a,
            row_b,
            theta,
            alpha,
            beta,
        })
    }

    /// `[[e^{ia} cos t, e^{ib} sin t], [-e^{-ib} sin t, e^{-ia} cos t]]`,
    /// row-major.
    pub fn block(&self) -> [[Complex<T>; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let ea = Complex::from_polar(T::one(), self.alpha);
        let eb = Complex::from_polar(T::one(), self.beta);
        [[ea.scale(c), eb.scale(s)], [-eb.conj().scale(s), ea.conj().scale(c)]]
    }

    /// Same rows, inverse block.
    pub fn inverse(&self) -> Self {
        // the adjoint of the block has angles (-theta, -alpha, beta)
        Self {
            theta: -self.theta,
            alpha: -self.alpha,
            ..*self
        }
    }

    /// `max |B B^H - I|` for the 2x2 block.
    pub fn block_unitarity_residual(&self) -> T {
        let m = self.block();
        let mut worst = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                let dot = m[i][0] * m[j][0].conj() + m[i][1] * m[j][1].conj();
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - Complex::new(target, T::zero())).norm());
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngleDistribution {
    /// All three angles uniform on `[0, 2pi)`.
    #[default]
    Uniform,
    /// `theta` uniform on `[0, theta_max]`, phases uniform on `[0, 2pi)`.
    SmallAngle { theta_max: f64 },
}

/// Draws a random pair of distinct rows (uniform over unordered pairs) and
/// three angles.
pub fn propose<T: Real>(rng: &mut impl Rng, dim: usize) -> Result<RotationProposal<T>> {
    propose_with(rng, dim, AngleDistribution::Uniform)
}

pub fn propose_with<T: Real>(rng: &mut impl Rng, dim: usize, angles: AngleDistribution) -> Result<RotationProposal<T>> {
    if dim < 2 {
        return Err(Error::InvalidDimension { got: dim, min: 2 });
    }
    let row_a = rng.random_range(0..dim);
    let mut row_b = rng.random_range(0..dim - 1);
    if row_b >= row_a {
        row_b += 1;
    }
    let theta = match angles {
        AngleDistribution::Uniform => rng.random::<f64>() * TAU,
        AngleDistribution::SmallAngle { theta_max } => rng.random::<f64>() * theta_max,
    };
    let alpha = rng.random::<f64>() * TAU;
    let beta = rng.random::<f64>() * TAU;
    Ok(RotationProposal {
        row_a,
        row_b,
        theta: T::lit(theta),
        alpha: T::lit(alpha),
        beta: T::lit(beta),
    })
}

/// Replaces rows `(a, b)` by `block * (a, b)`.
pub fn apply_rotation_in_place<T: Real>(basis: &mut LocalizedBasis<T>, prop: &RotationProposal<T>) {
    let m = prop.block();
    let (ra, rb) = basis.coeffs_mut().row_pair_mut(prop.row_a, prop.row_b);
    for (a, b) in ra.iter_mut().zip(rb.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = m[0][0] * u + m[0][1] * v;
        *b = m[1][0] * u + m[1][1] * v;
    }
}

pub fn apply_rotation<T: Real>(basis: &LocalizedBasis<T>, prop: &RotationProposal<T>) -> LocalizedBasis<T> {
    let mut out = basis.clone();
    apply_rotation_in_place(&mut out, prop);
    out
}

/// Per-row `<x>` and `<p>`, kept in sync with the basis during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RowCache<T> {
    pub mean_x: Vec<T>,
    pub mean_p: Vec<T>,
}

impl<T: Real> RowCache<T> {
    pub fn build(basis: &LocalizedBasis<T>, quads: &QuadratureMatrices<T>) -> Self {
        let (mean_x, mean_p) = (0..basis.dim()).map(|n| quads.mean_xp(basis.row(n))).unzip();
        Self { mean_x, mean_p }
    }

    pub fn refresh_row(&mut self, basis: &LocalizedBasis<T>, quads: &QuadratureMatrices<T>, n: usize) {
        let (x, p) = quads.mean_xp(basis.row(n));
        self.mean_x[n] = x;
        self.mean_p[n] = p;
    }

    /// `S` from the cached values.
    pub fn objective(&self) -> T {
        self.mean_x
            .iter()
            .zip(&self.mean_p)
            .fold(T::zero(), |acc, (&x, &p)| acc + x * x + p * p)
    }
}

/// Change in `S` if `prop` were applied, in O(N).
pub fn delta_s<T: Real>(
    basis: &LocalizedBasis<T>,
    prop: &RotationProposal<T>,
    cache: &RowCache<T>,
    quads: &QuadratureMatrices<T>,
) -> T {
    let (a, b) = (prop.row_a, prop.row_b);
    let (xab, pab) = quads.cross_xp(basis.row(a), basis.row(b));
    let m = prop.block();
    let two = T::lit(2.0);
    // <u|O|u> for u = c0 |a> + c1 |b>
    let mixed = |c0: Complex<T>, c1: Complex<T>, oa: T, ob: T, oab: Complex<T>| {
        c0.norm_sqr() * oa + c1.norm_sqr() * ob + two * (c0.conj() * c1 * oab).re
    };
    let (xa, xb, pa, pb) = (cache.mean_x[a], cache.mean_x[b], cache.mean_p[a], cache.mean_p[b]);
    let xa2 = mixed(m[0][0], m[0][1], xa, xb, xab);
    let pa2 = mixed(m[0][0], m[0][1], pa, pb, pab);
    let xb2 = mixed(m[1][0], m[1][1], xa, xb, xab);
    let pb2 = mixed(m[1][0], m[1][1], pa, pb, pab);
    (xa2 * xa2 + pa2 * pa2 + xb2 * xb2 + pb2 * pb2) - (xa * xa + pa * pa + xb * xb + pb * pb)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub seed: u64,
    pub max_proposals: u64,
    /// Stop after this many consecutive rejections.
    pub saturation_window: u64,
    /// Smallest `dS` counted as an improvement (strict inequality).
    pub min_delta: f64,
    /// Accepted steps between re-orthonormalizations.
    pub renorm_interval: u64,
    /// Also stop when `S` grew by less than this relative amount over the
    /// last `saturation_window` proposals.
    pub relative_tolerance: f64,
    pub angles: AngleDistribution,
    /// Record every this-many accepted steps in the history (plus powers of two).
    pub history_stride: u64,
}

impl OptimizerConfig {
    pub const WINDOW_PER_LEVEL: u64 = 5000;
    pub const PROPOSALS_PER_LEVEL: u64 = 500_000;

    /// Defaults for an `dim`-level space.
    pub fn for_dim(dim: usize, seed: u64) -> Self {
        Self {
            seed,
            max_proposals: Self::PROPOSALS_PER_LEVEL * dim.max(1) as u64,
            saturation_window: Self::WINDOW_PER_LEVEL * dim.max(1) as u64,
            min_delta: 0.0,
            renorm_interval: 10_000,
            relative_tolerance: 1e-9,
            angles: AngleDistribution::Uniform,
            history_stride: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_proposals < 1 {
            return Err(Error::InvalidConfig("max_proposals must be at least 1".into()));
        }
        if self.saturation_window < 1 {
            return Err(Error::InvalidConfig("saturation_window must be at least 1".into()));
        }
        if !(self.min_delta >= 0.0) {
            return Err(Error::InvalidConfig("min_delta must be non-negative".into()));
        }
        if self.renorm_interval < 1 {
            return Err(Error::InvalidConfig("renorm_interval must be at least 1".into()));
        }
        if !(self.relative_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("relative_tolerance must be non-negative".into()));
        }
        if self.history_stride < 1 {
            return Err(Error::InvalidConfig("history_stride must be at least 1".into()));
        }
        if let AngleDistribution::SmallAngle { theta_max } = self.angles {
            if !(theta_max > 0.0 && theta_max.is_finite()) {
                return Err(Error::InvalidConfig("theta_max must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Fewer than two levels: nothing to rotate.
    Trivial,
    MaxProposals,
    ConsecutiveRejections,
    RelativeImprovement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub accepted_count: u64,
    pub rejected_count: u64,
    /// `(proposal index, S)` after selected accepted steps; non-decreasing in S.
    pub s_history: Vec<(u64, f64)>,
    pub final_s: f64,
    pub stop_reason: StopReason,
    /// FNV-1a digest of the accept/reject decision sequence.
    pub decision_digest: u64,
    /// Largest unitarity residual seen at a checkpoint, before re-orthonormalization.
    pub max_unitarity_drift: f64,
    pub final_unitarity_residual: f64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

struct Checkpoint<'a, T> {
    quads: &'a QuadratureMatrices<T>,
    drift_limit: T,
}

impl<T: Real> Checkpoint<'_, T> {
    /// Measures drift, re-orthonormalizes, and checks the trace identity.
    fn run(&self, basis: &mut LocalizedBasis<T>, cache: &mut RowCache<T>, running_s: T) -> Result<T> {
        let drift = basis.unitarity_residual();
        if !(drift <= self.drift_limit) {
            return Err(Error::UnitarityDrift {
                residue: drift.to_f64_lossy(),
                limit: self.drift_limit.to_f64_lossy(),
            });
        }
        if !basis.coeffs_mut().orthonormalize_rows() {
            return Err(Error::UnitarityDrift {
                residue: f64::INFINITY,
                limit: self.drift_limit.to_f64_lossy(),
            });
        }
        *cache = RowCache::build(basis, self.quads);
        let full = objective_s(basis, self.quads)?;
        let n = basis.dim();
        let tol = T::tolerance(1e-8, 64.0 * (n * n) as f64);
        if (full - running_s).abs() > tol {
            return Err(Error::VarianceMismatch {
                trace: full.to_f64_lossy(),
                direct: running_s.to_f64_lossy(),
            });
        }
        // trace identity cross-check
        mean_variance(basis, self.quads)?;
        Ok(drift)
    }
}

/// Runs the greedy search starting from `basis`.
pub fn run<T: Real>(
    basis: LocalizedBasis<T>,
    cfg: &OptimizerConfig,
    quads: &QuadratureMatrices<T>,
) -> Result<(LocalizedBasis<T>, OptimizationTrace)> {
    cfg.validate()?;
    if quads.dim() != basis.dim() {
        return Err(Error::InvalidArgument("operator and basis dimensions differ".into()));
    }
    let mut basis = basis;
    let n = basis.dim();
    let initial_s = objective_s(&basis, quads)?;
    let mut trace = OptimizationTrace {
        accepted_count: 0,
        rejected_count: 0,
        s_history: vec![(0, initial_s.to_f64_lossy())],
        final_s: initial_s.to_f64_lossy(),
        stop_reason: StopReason::Trivial,
        decision_digest: FNV_OFFSET,
        max_unitarity_drift: 0.0,
        final_unitarity_residual: basis.unitarity_residual().to_f64_lossy(),
    };
    if n < 2 {
        return Ok((basis, trace));
    }

    let checkpoint = Checkpoint {
        quads,
        drift_limit: T::tolerance(1e-6, 1e3 * n as f64),
    };
    let min_delta = T::lit(cfg.min_delta);
    let rel_tol = T::lit(cfg.relative_tolerance);
    let mut rng = seeded_rng(cfg.seed);
    let mut cache = RowCache::build(&basis, quads);
    let mut running_s = initial_s;
    let mut window_start_s = initial_s;
    let mut streak = 0u64;
    let mut since_renorm = 0u64;
    let mut proposals = 0u64;

    let stop_reason = loop {
        if proposals >= cfg.max_proposals {
            break StopReason::MaxProposals;
        }
        let prop = propose_with::<T>(&mut rng, n, cfg.angles)?;
        proposals += 1;
        let ds = delta_s(&basis, &prop, &cache, quads);
        let accepted = ds > min_delta;
        trace.decision_digest = (trace.decision_digest ^ u64::from(accepted)).wrapping_mul(FNV_PRIME);
        if accepted {
            apply_rotation_in_place(&mut basis, &prop);
            let before = cache.mean_x[prop.row_a].powi(2)
                + cache.mean_p[prop.row_a].powi(2)
                + cache.mean_x[prop.row_b].powi(2)
                + cache.mean_p[prop.row_b].powi(2);
            cache.refresh_row(&basis, quads, prop.row_a);
            cache.refresh_row(&basis, quads, prop.row_b);
            let after = cache.mean_x[prop.row_a].powi(2)
                + cache.mean_p[prop.row_a].powi(2)
                + cache.mean_x[prop.row_b].powi(2)
                + cache.mean_p[prop.row_b].powi(2);
            running_s = running_s + (after - before);
            trace.accepted_count += 1;
            streak = 0;
            since_renorm += 1;
            let k = trace.accepted_count;
            if k.is_power_of_two() || k.is_multiple_of(cfg.history_stride) {
                trace.s_history.push((proposals, running_s.to_f64_lossy()));
            }
            if since_renorm >= cfg.renorm_interval {
                let drift = checkpoint.run(&mut basis, &mut cache, running_s)?;
                trace.max_unitarity_drift = trace.max_unitarity_drift.max(drift.to_f64_lossy());
                since_renorm = 0;
            }
        } else {
            trace.rejected_count += 1;
            streak += 1;
            if streak >= cfg.saturation_window {
                break StopReason::ConsecutiveRejections;
            }
        }
        if proposals.is_multiple_of(cfg.saturation_window) {
            if running_s - window_start_s <= rel_tol * running_s.abs() {
                break StopReason::RelativeImprovement;
            }
            window_start_s = running_s;
        }
    };

    let drift = checkpoint.run(&mut basis, &mut cache, running_s)?;
    trace.max_unitarity_drift = trace.max_unitarity_drift.max(drift.to_f64_lossy());
    trace.stop_reason = stop_reason;
    trace.final_s = objective_s(&basis, quads)?.to_f64_lossy();
    trace.final_unitarity_residual = basis.unitarity_residual().to_f64_lossy();
    let last = trace.s_history.last().map(|&(i, _)| i);
    if last != Some(proposals) && trace.final_s >= trace.s_history.last().map_or(f64::MIN, |&(_, s)| s) {
        trace.s_history.push((proposals, trace.final_s));
    }
    Ok((basis, trace))
}

/// Haar-like random unitary: Gaussian complex entries, rows orthonormalized.
pub fn random_unitary<T: Real>(space: TruncatedSpace, rng: &mut impl Rng) -> LocalizedBasis<T> {
    let n = space.dim();
    loop {
        let mut m = CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re), T::lit(im))
        });
        if m.orthonormalize_rows() {
            return LocalizedBasis::from_coeffs(space, m).expect("square by construction");
        }
    }
}
