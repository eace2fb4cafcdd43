//! Phase-space localized orthonormal bases of a truncated harmonic
//! oscillator, found by greedy Monte-Carlo search over products of random
//! 2x2 unitary blocks, together with the analyses built on top of them.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the
//! experiment harness uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod optimizer;
pub mod oscillator;
pub mod persist;
mod scalar;
pub mod thermal;

pub use analysis::{
    energy_stats, fit_log, fit_power, fit_tail, localization_estimate, position_profile, EnergyStats, FitModel,
    FitResult, TailFit,
};
pub use basis::{init_identity, mean_variance, objective_s, LocalizedBasis, QuadratureMoments, StateMoments};
pub use error::{Error, Result};
pub use harness::{emit_figure_data, run_sweep, verify, ExperimentConfig, RunManifest, VerifyReport};
pub use matrix::CMatrix;
pub use optimizer::{
    apply_rotation, delta_s, propose, random_unitary, run, OptimizationTrace, OptimizerConfig, RotationProposal,
    RowCache,
};
pub use oscillator::{build_quadratures, build_space, eval_eigenfunctions, QuadratureMatrices, TruncatedSpace};
pub use persist::{load_matrix, save_matrix, MatrixHeader, MatrixKind};
pub use scalar::Real;
pub use thermal::{
    band_profile, build_ensemble, canonical_ensemble, response, BandProfile, ResponseSeries, ThermalEnsemble,
};

pub type LocalizedBasis64 = LocalizedBasis<f64>;
pub type LocalizedBasis32 = LocalizedBasis<f32>;
pub type QuadratureMatrices64 = QuadratureMatrices<f64>;
pub type RotationProposal64 = RotationProposal<f64>;
pub type CMatrix64 = CMatrix<f64>;
