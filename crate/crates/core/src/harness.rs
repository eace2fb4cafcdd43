//! Sweep driver: runs the optimizer over a list of dimensions, persists
//! every basis, and collects the statistics behind both figures.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{energy_stats, fit_log, fit_power, position_profiles, tail_summary, FitResult};
use crate::basis::{init_identity, mean_variance, objective_s, LocalizedBasis, QuadratureMoments};
use crate::error::{Error, Result};
use crate::optimizer::{run, AngleDistribution, OptimizationTrace, OptimizerConfig, StopReason};
use crate::oscillator::{build_quadratures, build_space, default_grid, QuadratureMatrices};
use crate::persist::{load_matrix, save_matrix, write_json_atomic, MatrixHeader, MatrixKind};
use crate::thermal::{
    band_profile, build_ensemble, canonical_ensemble, default_response, dipole_perturbation, quartile_weights,
    response, response_at, revival_times, transition_band, ThermalEnsemble, DEFAULT_COUPLING, DEFAULT_TIME_POINTS,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FIG1_FILE: &str = "fig1.csv";
pub const FIG2_FILE: &str = "fig2.csv";
pub const MANIFEST_VERSION: u32 = 1;
/// Points on each fitted curve written to the figure files.
pub const FIT_SAMPLES: usize = 64;
const UNITS: &str = "units: hbar = m = omega = 1";

/// Optimizer settings; budgets scale with the dimension of each run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub proposals_per_level: u64,
    pub window_per_level: u64,
    pub min_delta: f64,
    pub renorm_interval: u64,
    pub relative_tolerance: f64,
    pub angles: AngleDistribution,
    pub history_stride: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let d = OptimizerConfig::for_dim(1, 0);
        Self {
            proposals_per_level: OptimizerConfig::PROPOSALS_PER_LEVEL,
            window_per_level: OptimizerConfig::WINDOW_PER_LEVEL,
            min_delta: d.min_delta,
            renorm_interval: d.renorm_interval,
            relative_tolerance: d.relative_tolerance,
            angles: d.angles,
            history_stride: d.history_stride,
        }
    }
}

impl OptimizerSettings {
    pub fn for_dim(&self, dim: usize, seed: u64) -> OptimizerConfig {
        let levels = dim.max(1) as u64;
        OptimizerConfig {
            seed,
            max_proposals: self.proposals_per_level.saturating_mul(levels),
            saturation_window: self.window_per_level.saturating_mul(levels),
            min_delta: self.min_delta,
            renorm_interval: self.renorm_interval,
            relative_tolerance: self.relative_tolerance,
            angles: self.angles,
            history_stride: self.history_stride,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub seed: u64,
    pub optimizer: OptimizerSettings,
    /// Inverse temperature; enables the thermal stage.
    pub beta: Option<f64>,
    pub output_dir: PathBuf,
    pub emit_profiles: bool,
    /// Parallel runs; 0 means one per available core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_values: vec![2, 4, 8, 16, 32, 64],
            seed: 7,
            optimizer: OptimizerSettings::default(),
            beta: None,
            output_dir: PathBuf::from("locbasis-out"),
            emit_profiles: false,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::InvalidConfig("n_values is empty".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 1) {
            return Err(Error::InvalidConfig(format!(
                "n_values entries must be at least 1, got {n}"
            )));
        }
        let mut sorted = self.n_values.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!("N = {} listed twice", w[0])));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "beta must be positive and finite, got {beta}"
                )));
            }
        }
        self.optimizer.for_dim(1, 0).validate()
    }
}

/// Seed for the run at dimension `n`: word `n` of the ChaCha stream keyed
/// by the sweep seed, so runs do not depend on which other N are present.
pub fn subseed(seed: u64, n: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng.next_u64()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub median_nu: f64,
    pub q1_nu: f64,
    pub q3_nu: f64,
    pub fitted_states: usize,
    pub skipped_states: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalStats {
    pub beta: f64,
    pub purity: f64,
    pub effective_bandwidth: usize,
    pub canonical_bandwidth: usize,
    /// Spectral weight in the lowest / highest quarter of the transition band.
    pub low_quartile: Option<f64>,
    pub high_quartile: Option<f64>,
    pub max_imag: f64,
    pub response_at_zero: f64,
    pub periodicity_error: f64,
    pub max_abs_canonical_response: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub final_s: f64,
    pub mean_variance: f64,
    pub avg_de2: f64,
    pub avg_mean_energy: f64,
    pub relative_energy_spread: f64,
    pub min_uncertainty_product: f64,
    pub unitarity_residual: f64,
    pub accepted: u64,
    pub rejected: u64,
    pub stop_reason: StopReason,
    pub decision_digest: u64,
    pub tail: Option<TailStats>,
    pub thermal: Option<ThermalStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NRecord {
    pub n: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub stats: Option<RunStats>,
    /// Artifact paths relative to the output directory, keyed by role.
    pub files: BTreeMap<String, String>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFits {
    /// `mean_variance = a + b ln N`.
    pub mean_variance: FitResult,
    /// `avg_de2 = a N^b`.
    pub avg_de2: FitResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub config: ExperimentConfig,
    /// False while runs are still outstanding.
    pub complete: bool,
    pub records: Vec<NRecord>,
    pub fits: Option<SweepFits>,
    /// Why `fits` is absent.
    pub fit_note: Option<String>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn failed(&self) -> impl Iterator<Item = &NRecord> {
        self.records.iter().filter(|r| r.status == RunStatus::Failed)
    }

    pub fn record(&self, n: usize) -> Option<&NRecord> {
        self.records.iter().find(|r| r.n == n)
    }

    fn successful(&self) -> impl Iterator<Item = (usize, &RunStats)> {
        self.records.iter().filter_map(|r| r.stats.as_ref().map(|s| (r.n, s)))
    }
}

#[derive(Serialize)]
struct TraceSidecar<'a> {
    n: usize,
    seed: u64,
    config: &'a OptimizerConfig,
    trace: &'a OptimizationTrace,
}

#[derive(Deserialize)]
struct TraceSidecarOwned {
    trace: OptimizationTrace,
}

#[derive(Serialize)]
struct StateRow {
    state: usize,
    mean_x: f64,
    mean_p: f64,
    dx2: f64,
    dp2: f64,
    uncertainty_product: f64,
    mean_e: f64,
    de2: f64,
}

fn basis_file(n: usize) -> String {
    format!("basis_N{n}.bin")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_states(dir: &Path, n: usize, rows: &[StateRow], files: &mut BTreeMap<String, String>) -> Result<()> {
    let name = format!("states_N{n}.csv");
    let mut out = create(&dir.join(&name))?;
    writeln!(out, "# per-state statistics of the localized basis, N = {n}; {UNITS}")?;
    writeln!(out, "state,mean_x,mean_p,dx2,dp2,uncertainty_product,mean_e,de2")?;
    for r in rows {
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.state, r.mean_x, r.mean_p, r.dx2, r.dp2, r.uncertainty_product, r.mean_e, r.de2
        )?;
    }
    out.flush()?;
    files.insert("states_csv".into(), name);

    let name = format!("states_N{n}.json");
    write_json_atomic(&dir.join(&name), &rows)?;
    files.insert("states_json".into(), name);
    Ok(())
}

fn write_profiles(dir: &Path, basis: &LocalizedBasis<f64>, files: &mut BTreeMap<String, String>) -> Result<()> {
    let n = basis.dim();
    let grid = default_grid::<f64>(basis.space());
    let profiles = position_profiles(basis, &grid)?;
    let name = format!("profiles_N{n}.csv");
    let mut out = create(&dir.join(&name))?;
    writeln!(
        out,
        "# position probability density |psi_k(x)|^2 per basis state, N = {n}; {UNITS}"
    )?;
    write!(out, "x")?;
    for k in 0..n {
        write!(out, ",psi2_{k}")?;
    }
    writeln!(out)?;
    for (i, x) in grid.iter().enumerate() {
        write!(out, "{x:e}")?;
        for p in &profiles {
            write!(out, ",{:e}", p[i])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    files.insert("profiles_csv".into(), name);
    Ok(())
}

/// Largest `|delta <H0>(t)|` of the canonical ensemble over the default grid.
fn canonical_null_response(n: usize, beta: f64, quads: &QuadratureMatrices<f64>) -> Result<f64> {
    let canon = canonical_ensemble::<f64>(build_space(n)?, beta)?;
    let series = default_response(&canon, quads)?;
    Ok(series.values.iter().fold(0.0, |m, v| m.max(v.abs())))
}

fn ensemble_checks(ens: &ThermalEnsemble<f64>, quads: &QuadratureMatrices<f64>) -> (f64, f64) {
    let h1 = dipole_perturbation(quads, DEFAULT_COUPLING);
    let at_zero = response_at(ens, &h1, 0.0).norm();
    let period = response_at(ens, &h1, 2.0 * std::f64::consts::PI);
    (at_zero, (period - response_at(ens, &h1, 0.0)).norm())
}

fn thermal_stage(
    dir: &Path,
    basis: &LocalizedBasis<f64>,
    quads: &QuadratureMatrices<f64>,
    beta: f64,
    files: &mut BTreeMap<String, String>,
) -> Result<ThermalStats> {
    let n = basis.dim();
    let ens = build_ensemble(basis, beta)?;
    let band = band_profile(&ens);
    let canon = canonical_ensemble::<f64>(basis.space(), beta)?;
    let series = default_response(&ens, quads)?;
    let quartiles = quartile_weights(&series, transition_band(&series, n)).ok();
    let (response_at_zero, periodicity_error) = ensemble_checks(&ens, quads);

    let name = format!("rho_N{n}.bin");
    let header = MatrixHeader {
        beta: Some(beta),
        ..MatrixHeader::new(MatrixKind::DensityMatrix, n)
    };
    save_matrix(&dir.join(&name), &header, &ens.rho)?;
    files.insert("rho".into(), name);

    let name = format!("band_N{n}.csv");
    let mut out = create(&dir.join(&name))?;
    writeln!(
        out,
        "# band weight w_d = sum over |j-k| = d of |rho_jk|^2, beta = {beta}, N = {n}"
    )?;
    writeln!(
        out,
        "# effective bandwidth (99% of weight): {}",
        band.effective_bandwidth
    )?;
    writeln!(out, "d,w_d")?;
    for (d, w) in band.band_weight.iter().enumerate() {
        writeln!(out, "{d},{w:e}")?;
    }
    out.flush()?;
    files.insert("band_csv".into(), name);

    let name = format!("response_N{n}.csv");
    let mut out = create(&dir.join(&name))?;
    writeln!(out, "# linear response delta<H0>(t), {}; {UNITS}", series.perturbation)?;
    writeln!(out, "t,value")?;
    for (t, v) in series.times.iter().zip(&series.values) {
        writeln!(out, "{t:e},{v:e}")?;
    }
    out.flush()?;
    files.insert("response_csv".into(), name);

    let name = format!("spectrum_N{n}.csv");
    let mut out = create(&dir.join(&name))?;
    writeln!(
        out,
        "# DFT magnitude of delta<H0>(t); angular frequency = index * {:e}",
        series.frequency_step
    )?;
    writeln!(out, "index,magnitude")?;
    for (k, m) in series.spectrum.iter().enumerate() {
        writeln!(out, "{k},{m:e}")?;
    }
    out.flush()?;
    files.insert("spectrum_csv".into(), name);

    Ok(ThermalStats {
        beta,
        purity: ens.purity(),
        effective_bandwidth: band.effective_bandwidth,
        canonical_bandwidth: band_profile(&canon).effective_bandwidth,
        low_quartile: quartiles.map(|q| q.low),
        high_quartile: quartiles.map(|q| q.high),
        max_imag: series.max_imag,
        response_at_zero,
        periodicity_error,
        max_abs_canonical_response: canonical_null_response(n, beta, quads)?,
    })
}

fn run_one(cfg: &ExperimentConfig, n: usize, seed: u64, files: &mut BTreeMap<String, String>) -> Result<RunStats> {
    let dir = cfg.output_dir.as_path();
    let space = build_space(n)?;
    let quads = build_quadratures::<f64>(space);
    let ocfg = cfg.optimizer.for_dim(n, seed);
    let (basis, trace) = run(init_identity(space), &ocfg, &quads)?;

    let name = basis_file(n);
    let header = MatrixHeader {
        seed: Some(seed),
        final_s: Some(trace.final_s),
        config: Some(serde_json::to_value(&ocfg)?),
        ..MatrixHeader::new(MatrixKind::Basis, n)
    };
    save_matrix(&dir.join(&name), &header, basis.coeffs())?;
    files.insert("basis".into(), name);

    let name = format!("basis_N{n}.trace.json");
    write_json_atomic(
        &dir.join(&name),
        &TraceSidecar {
            n,
            seed,
            config: &ocfg,
            trace: &trace,
        },
    )?;
    files.insert("trace".into(), name);

    let moments = QuadratureMoments::compute(&basis, &quads);
    let energy = energy_stats(&basis);
    let rows: Vec<StateRow> = moments
        .states
        .iter()
        .zip(energy.mean_e.iter().zip(&energy.de2))
        .enumerate()
        .map(|(state, (m, (&mean_e, &de2)))| StateRow {
            state,
            mean_x: m.mean_x,
            mean_p: m.mean_p,
            dx2: m.dx2(),
            dp2: m.dp2(),
            uncertainty_product: m.uncertainty_product(),
            mean_e,
            de2,
        })
        .collect();
    write_states(dir, n, &rows, files)?;

    // Windows need a few units of room between the core and the cutoff.
    let tail = tail_summary(&basis, &quads, &default_grid::<f64>(space))
        .ok()
        .map(|t| TailStats {
            median_nu: t.median_nu,
            q1_nu: t.q1_nu,
            q3_nu: t.q3_nu,
            fitted_states: t.fitted_states,
            skipped_states: t.skipped_states,
        });
    if cfg.emit_profiles {
        write_profiles(dir, &basis, files)?;
    }
    let thermal = match cfg.beta {
        Some(beta) => Some(thermal_stage(dir, &basis, &quads, beta, files)?),
        None => None,
    };

    Ok(RunStats {
        final_s: trace.final_s,
        mean_variance: mean_variance(&basis, &quads)?,
        avg_de2: energy.avg_de2,
        avg_mean_energy: energy.avg_mean_energy(),
        relative_energy_spread: energy.relative_spread(),
        min_uncertainty_product: moments.min_uncertainty_product(),
        unitarity_residual: trace.final_unitarity_residual,
        accepted: trace.accepted_count,
        rejected: trace.rejected_count,
        stop_reason: trace.stop_reason,
        decision_digest: trace.decision_digest,
        tail,
        thermal,
    })
}

fn run_record(cfg: &ExperimentConfig, n: usize) -> NRecord {
    let seed = subseed(cfg.seed, n);
    let start = Instant::now();
    let mut files = BTreeMap::new();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_one(cfg, n, seed, &mut files)))
        .unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Err(Error::InvalidArgument(format!("panic: {msg}")))
        });
    let (status, error, stats) = match outcome {
        Ok(stats) => (RunStatus::Ok, None, Some(stats)),
        Err(e) => (RunStatus::Failed, Some(e.to_string()), None),
    };
    NRecord {
        n,
        seed,
        status,
        error,
        stats,
        files,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Fits over the successful runs with N >= 2 (a one-level space has no
/// energy spread, so it cannot enter the power law).
fn sweep_fits(records: &[NRecord]) -> (Option<SweepFits>, Option<String>) {
    let pts: Vec<(f64, &RunStats)> = records
        .iter()
        .filter(|r| r.n >= 2)
        .filter_map(|r| r.stats.as_ref().map(|s| (r.n as f64, s)))
        .collect();
    if pts.len() < 3 {
        return (
            None,
            Some(format!("{} successful runs with N >= 2; fits need 3", pts.len())),
        );
    }
    let var: Vec<(f64, f64)> = pts.iter().map(|(n, s)| (*n, s.mean_variance)).collect();
    let de2: Vec<(f64, f64)> = pts.iter().map(|(n, s)| (*n, s.avg_de2)).collect();
    match (fit_log(&var), fit_power(&de2)) {
        (Ok(mean_variance), Ok(avg_de2)) => (Some(SweepFits { mean_variance, avg_de2 }), None),
        (Err(e), _) | (_, Err(e)) => (None, Some(format!("fit failed: {e}"))),
    }
}

/// Runs every N of the sweep, writing the manifest after each completed
/// run and figure data at the end (when fits exist).
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir)?;
    let mut manifest = RunManifest {
        format_version: MANIFEST_VERSION,
        config: cfg.clone(),
        complete: false,
        records: Vec::new(),
        fits: None,
        fit_note: None,
    };
    write_json_atomic(&dir.join(MANIFEST_FILE), &manifest)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<NRecord>();
    let mut write_error = None;
    std::thread::scope(|scope| {
        scope.spawn(move || {
            pool.install(|| {
                cfg.n_values
                    .par_iter()
                    .for_each_with(tx, |tx, &n| tx.send(run_record(cfg, n)).expect("collector alive"));
            })
        });
        for record in rx {
            manifest.records.push(record);
            manifest.records.sort_by_key(|r| r.n);
            if let Err(e) = write_json_atomic(&dir.join(MANIFEST_FILE), &manifest) {
                write_error.get_or_insert(e);
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }

    let (fits, note) = sweep_fits(&manifest.records);
    manifest.fits = fits;
    manifest.fit_note = note;
    manifest.complete = true;
    if manifest.fits.is_some() {
        emit_figure_data(&manifest, dir)?;
    }
    write_json_atomic(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Rounds to four significant digits.
pub fn four_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.3e}").parse().expect("valid float");
    let mag = rounded.abs().log10().floor() as i32;
    if (-3..5).contains(&mag) {
        let decimals = (3 - mag).max(0) as usize;
        format!("{rounded:.decimals$}")
    } else {
        format!("{rounded:.3e}")
    }
}

fn fit_samples(fit: &FitResult) -> Vec<(f64, f64)> {
    let lo = fit.n_values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fit.n_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..FIT_SAMPLES)
        .map(|i| {
            let n = lo * (hi / lo).powf(i as f64 / (FIT_SAMPLES - 1) as f64);
            (n, fit.evaluate(n))
        })
        .collect()
}

fn write_figure(
    path: &Path,
    title: &str,
    formula: &str,
    column: &str,
    fit: &FitResult,
    data: &[(usize, f64)],
) -> Result<()> {
    let mut out = create(path)?;
    let [a, b] = fit.coefficients;
    writeln!(out, "# {title}; {UNITS}")?;
    writeln!(
        out,
        "# fit: {formula}, a = {}, b = {}, residual_rms = {}",
        four_sig(a),
        four_sig(b),
        four_sig(fit.residual_rms)
    )?;
    writeln!(out, "# block 0 (gnuplot index 0): N {column}")?;
    for (n, y) in data {
        writeln!(out, "{n} {y:e}")?;
    }
    writeln!(out)?;
    writeln!(out)?;
    writeln!(out, "# block 1 (gnuplot index 1): N fitted_{column}")?;
    for (n, y) in fit_samples(fit) {
        writeln!(out, "{n:e} {y:e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `fig1.csv` and `fig2.csv` into `dir`.
pub fn emit_figure_data(manifest: &RunManifest, dir: &Path) -> Result<Vec<PathBuf>> {
    let fits = manifest.fits.as_ref().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no fits in manifest ({}); figure data needs at least 3 successful runs with N >= 2",
            manifest.fit_note.as_deref().unwrap_or("not computed")
        ))
    })?;
    let pts: Vec<(usize, &RunStats)> = manifest.successful().filter(|(n, _)| *n >= 2).collect();
    let fig1 = dir.join(FIG1_FILE);
    write_figure(
        &fig1,
        "mean phase-space variance <dx^2 + dp^2> over basis states vs N",
        "y = a + b ln(N)",
        "mean_variance",
        &fits.mean_variance,
        &pts.iter().map(|(n, s)| (*n, s.mean_variance)).collect::<Vec<_>>(),
    )?;
    let fig2 = dir.join(FIG2_FILE);
    write_figure(
        &fig2,
        "energy variance <dE^2> averaged over basis states vs N",
        "y = a N^b",
        "avg_de2",
        &fits.avg_de2,
        &pts.iter().map(|(n, s)| (*n, s.avg_de2)).collect::<Vec<_>>(),
    )?;
    Ok(vec![fig1, fig2])
}

/// Acceptance bands for the sweep fits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitBands {
    pub log_slope: (f64, f64),
    pub log_intercept: (f64, f64),
    pub log_rms_max: f64,
    pub power_exponent: (f64, f64),
}

pub const FIT_BANDS: FitBands = FitBands {
    log_slope: (0.45, 0.75),
    log_intercept: (0.7, 1.3),
    log_rms_max: 0.15,
    power_exponent: (1.0, 1.5),
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn within(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.push(name, value <= limit, format!("{value:.3e} (limit {limit:.0e})"));
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn verify_basis(
    report: &mut VerifyReport,
    dir: &Path,
    record: &NRecord,
    stats: &RunStats,
) -> Result<LocalizedBasis<f64>> {
    let n = record.n;
    let file = record
        .files
        .get("basis")
        .ok_or_else(|| Error::Format("record lists no basis file".into()))?;
    let (header, coeffs) = load_matrix::<f64>(&dir.join(file))?;
    if header.kind != MatrixKind::Basis || header.n != n {
        return Err(Error::Format(format!("{file} does not hold an N = {n} basis")));
    }
    let basis = LocalizedBasis::from_coeffs(build_space(n)?, coeffs)?;
    let quads = build_quadratures::<f64>(basis.space());
    let n2 = (n * n) as f64;

    report.within(format!("N={n} unitarity"), basis.unitarity_residual(), 1e-10);

    let moments = QuadratureMoments::compute(&basis, &quads);
    let second: f64 = moments.states.iter().map(|m| m.mean_x2 + m.mean_p2).sum();
    report.within(format!("N={n} trace identity"), (second - n2).abs(), 1e-8);

    let energy = energy_stats(&basis);
    report.within(
        format!("N={n} energy trace"),
        (energy.total_mean_energy() - n2 / 2.0).abs(),
        1e-9,
    );

    let floor = moments.min_uncertainty_product();
    report.push(
        format!("N={n} uncertainty"),
        floor >= 0.25 - 1e-9,
        format!("min dx2*dp2 = {floor:.6}"),
    );

    match objective_s(&basis, &quads) {
        Ok(s) => report.within(
            format!("N={n} objective matches manifest"),
            (s - stats.final_s).abs(),
            1e-8,
        ),
        Err(e) => report.push(format!("N={n} objective matches manifest"), false, e.to_string()),
    }
    match mean_variance(&basis, &quads) {
        Ok(v) => report.within(
            format!("N={n} mean variance matches manifest"),
            (v - stats.mean_variance).abs(),
            1e-9,
        ),
        Err(e) => report.push(format!("N={n} mean variance matches manifest"), false, e.to_string()),
    }
    report.within(
        format!("N={n} avg de2 matches manifest"),
        (energy.avg_de2 - stats.avg_de2).abs(),
        1e-9,
    );
    Ok(basis)
}

fn verify_trace(report: &mut VerifyReport, dir: &Path, record: &NRecord, stats: &RunStats) -> Result<()> {
    let n = record.n;
    let file = record
        .files
        .get("trace")
        .ok_or_else(|| Error::Format("record lists no trace file".into()))?;
    let sidecar: TraceSidecarOwned = serde_json::from_str(&fs::read_to_string(dir.join(file))?)?;
    let hist = &sidecar.trace.s_history;
    let monotone = hist.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1)
        && hist
            .last()
            .is_none_or(|&(_, s)| s <= sidecar.trace.final_s + 1e-9 * (n * n).max(1) as f64);
    report.push(
        format!("N={n} S monotone"),
        monotone,
        format!("{} history points", hist.len()),
    );
    report.push(
        format!("N={n} trace matches manifest"),
        sidecar.trace.decision_digest == stats.decision_digest && sidecar.trace.accepted_count == stats.accepted,
        format!("digest {:016x}", sidecar.trace.decision_digest),
    );
    Ok(())
}

fn verify_thermal(
    report: &mut VerifyReport,
    dir: &Path,
    record: &NRecord,
    basis: &LocalizedBasis<f64>,
    beta: f64,
) -> Result<()> {
    let n = record.n;
    let quads = build_quadratures::<f64>(basis.space());
    let file = record
        .files
        .get("rho")
        .ok_or_else(|| Error::Format("record lists no density matrix".into()))?;
    let (header, rho) = load_matrix::<f64>(&dir.join(file))?;
    if header.kind != MatrixKind::DensityMatrix || header.n != n {
        return Err(Error::Format(format!("{file} does not hold an N = {n} density matrix")));
    }
    let ens = build_ensemble(basis, beta)?;
    report.within(format!("N={n} rho matches basis"), rho.max_abs_diff(&ens.rho), 1e-12);
    report.within(format!("N={n} rho trace"), (ens.trace().re - 1.0).abs(), 1e-12);
    report.within(format!("N={n} rho hermitian"), ens.rho.hermiticity_residual(), 1e-12);

    let null = canonical_null_response(n, beta, &quads)?;
    report.within(format!("N={n} canonical null response"), null, 1e-12);
    let (at_zero, period) = ensemble_checks(&ens, &quads);
    report.within(format!("N={n} response at t=0"), at_zero, 1e-14);
    report.within(format!("N={n} response period 2pi"), period, 1e-10);
    let series = response(
        &ens,
        &dipole_perturbation(&quads, DEFAULT_COUPLING),
        &revival_times(DEFAULT_TIME_POINTS),
    )?;
    report.within(format!("N={n} response real"), series.max_imag, 1e-10);
    Ok(())
}

fn verify_fits(report: &mut VerifyReport, manifest: &RunManifest) {
    let pts: Vec<(usize, f64)> = manifest
        .successful()
        .filter(|(n, _)| *n >= 2)
        .map(|(n, s)| (n, s.avg_de2))
        .collect();
    let monotone = pts.windows(2).all(|w| w[1].1 >= w[0].1);
    report.push("avg de2 non-decreasing in N", monotone, format!("{} runs", pts.len()));
    let mut worst = f64::INFINITY;
    for &(n, de2) in &pts {
        if n >= 8 && n % 2 == 0 {
            if let Some(&(_, half)) = pts.iter().find(|(m, _)| *m == n / 2) {
                worst = worst.min(de2 / half);
            }
        }
    }
    if worst.is_finite() {
        report.push(
            "avg de2 at-least-linear growth",
            worst >= 1.0,
            format!("min de2(N)/de2(N/2) = {worst:.3} (need >= 1)"),
        );
    }

    let Some(fits) = &manifest.fits else {
        return;
    };
    let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
    let [a, b] = fits.mean_variance.coefficients;
    report.push(
        "fig1 log-fit slope",
        inside(b, FIT_BANDS.log_slope),
        format!("b = {b:.4} in {:?}", FIT_BANDS.log_slope),
    );
    report.push(
        "fig1 log-fit intercept",
        inside(a, FIT_BANDS.log_intercept),
        format!("a = {a:.4} in {:?}", FIT_BANDS.log_intercept),
    );
    report.push(
        "fig1 log-fit residual",
        fits.mean_variance.residual_rms < FIT_BANDS.log_rms_max,
        format!(
            "rms = {:.4} < {}",
            fits.mean_variance.residual_rms, FIT_BANDS.log_rms_max
        ),
    );
    let e = fits.avg_de2.coefficients[1];
    report.push(
        "fig2 power-fit exponent",
        inside(e, FIT_BANDS.power_exponent),
        format!("e = {e:.4} in {:?}", FIT_BANDS.power_exponent),
    );
}

/// Re-checks every persisted artifact listed in the manifest under `dir`.
pub fn verify(dir: &Path) -> Result<VerifyReport> {
    let manifest = RunManifest::load(dir)?;
    let mut report = VerifyReport::default();
    report.push(
        "manifest complete",
        manifest.complete,
        format!("{} records", manifest.records.len()),
    );
    let mut requested = manifest.config.n_values.clone();
    requested.sort_unstable();
    let recorded: Vec<usize> = manifest.records.iter().map(|r| r.n).collect();
    report.push(
        "one record per N",
        requested == recorded,
        format!("requested {requested:?}, recorded {recorded:?}"),
    );

    for record in &manifest.records {
        let n = record.n;
        let Some(stats) = &record.stats else {
            report.push(
                format!("N={n} run"),
                false,
                record.error.clone().unwrap_or_else(|| "no statistics".into()),
            );
            continue;
        };
        let basis = match verify_basis(&mut report, dir, record, stats) {
            Ok(b) => b,
            Err(e) => {
                report.push(format!("N={n} basis file"), false, e.to_string());
                continue;
            }
        };
        if let Err(e) = verify_trace(&mut report, dir, record, stats) {
            report.push(format!("N={n} trace file"), false, e.to_string());
        }
        if let Some(beta) = manifest.config.beta {
            if let Err(e) = verify_thermal(&mut report, dir, record, &basis, beta) {
                report.push(format!("N={n} thermal files"), false, e.to_string());
            }
        }
    }
    verify_fits(&mut report, &manifest);
    Ok(report)
}
