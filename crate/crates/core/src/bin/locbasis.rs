use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use locbasis::harness::{run_sweep, verify, ExperimentConfig};

const EXIT_RUN_FAILURE: u8 = 1;
const EXIT_VERIFY_FAILURE: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Optimize phase-space localized oscillator bases over a sweep of N and
/// write figure data, or verify a finished sweep.
#[derive(Debug, Parser)]
#[command(name = "locbasis", version)]
struct Cli {
    /// TOML experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimensions to run, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    n: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Inverse temperature; enables the thermal stage.
    #[arg(long)]
    beta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check an existing output directory instead of running.
    #[arg(long)]
    verify: bool,
    /// Also write position-density profiles for every state.
    #[arg(long)]
    emit_profiles: bool,
    /// Parallel runs (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
}

fn load_config(cli: &Cli) -> locbasis::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = &cli.n {
        cfg.n_values = n.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.beta.is_some() {
        cfg.beta = cli.beta;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if cli.emit_profiles {
        cfg.emit_profiles = true;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("locbasis: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    if cli.verify {
        return match verify(&cfg.output_dir) {
            Ok(report) => {
                println!("{report}");
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_VERIFY_FAILURE)
                }
            }
            Err(e) => {
                eprintln!("locbasis: cannot verify {}: {e}", cfg.output_dir.display());
                ExitCode::from(EXIT_VERIFY_FAILURE)
            }
        };
    }

    let manifest = match run_sweep(&cfg) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("locbasis: {e}");
            return ExitCode::from(EXIT_RUN_FAILURE);
        }
    };
    for r in &manifest.records {
        match (&r.stats, &r.error) {
            (Some(s), _) => println!(
                "N={:<4} mean variance {:.4}  avg dE^2 {:.4}  proposals {}  {:.1}s",
                r.n,
                s.mean_variance,
                s.avg_de2,
                s.accepted + s.rejected,
                r.wall_time_s
            ),
            (None, err) => println!("N={:<4} FAILED: {}", r.n, err.as_deref().unwrap_or("unknown error")),
        }
    }
    match &manifest.fits {
        Some(f) => {
            let [a, b] = f.mean_variance.coefficients;
            let [c, e] = f.avg_de2.coefficients;
            println!("mean variance = {a:.4} + {b:.4} ln N;  avg dE^2 = {c:.4} N^{e:.4}");
        }
        None => println!("no fits: {}", manifest.fit_note.as_deref().unwrap_or("")),
    }
    println!(
        "wrote {}",
        cfg.output_dir.join(locbasis::harness::MANIFEST_FILE).display()
    );
    if manifest.failed().next().is_some() {
        ExitCode::from(EXIT_RUN_FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}
