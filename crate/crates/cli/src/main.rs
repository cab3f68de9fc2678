//! `ccqed`: command-line driver for cavity spin-glass experiments.
//!
//! Every subcommand reads an optional JSON config (`--config`) and applies
//! flag overrides on top. Exit codes: 0 success, 2 invalid input (including
//! config schema errors and unknown flags), 3 numerical failure.
//!
//! ```text
//! ccqed --out runs/a --n-spins 8 --n-j 4 --n-traj 20 run
//! ccqed --config glass.json --workers 4 run-quantum
//! ccqed --out runs/a analyze
//! ccqed --out runs/a report --bins 16
//! ```

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccqed_core::model::stability_eigenvalues;
use ccqed_core::pipeline;
use ccqed_core::{Engine, Error, ExperimentConfig, Result};

/// Default output root when neither `--out` nor the config names one.
const OUTPUT_ENV: &str = "CCQED_OUTPUT_ROOT";

#[derive(Parser, Debug)]
#[command(name = "ccqed", version, about = "Spin-glass dynamics in a multimode cavity")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment config; missing fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every derived random stream.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1, value_name = "INT")]
    workers: usize,
    /// Output root directory.
    #[arg(long, global = true, env = OUTPUT_ENV, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long, global = true)]
    n_spins: Option<usize>,
    #[arg(long, global = true)]
    n_j: Option<usize>,
    #[arg(long, global = true)]
    n_traj: Option<usize>,
    /// Step the drive to full power at t = 0 instead of ramping.
    #[arg(long, global = true)]
    quench: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EngineArg {
    Quantum,
    Semiclassical,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample layouts, build coupling matrices and spectra.
    BuildJ,
    /// Print g_c and the smallest normal-phase stability eigenvalue at g_c.
    Threshold {
        /// Realization index; built on the fly when not stored.
        #[arg(long, default_value_t = 0)]
        j: usize,
    },
    /// Simulate quantum trajectories for every realization.
    RunQuantum,
    /// Integrate semiclassical trajectories for every realization.
    RunSemiclassical,
    /// Enumerate Ising local minima of every stored realization.
    EnumerateMinima,
    /// Compute all statistics from stored trajectories.
    Analyze,
    /// Refit equilibrium temperatures from analysed overlap histograms.
    FitTemperature,
    /// Ultrametric statistics from analysed overlap matrices.
    Ultrametric,
    /// Re-bin analysed overlaps and magnetizations.
    Report {
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Full pipeline: ensemble, trajectories, analysis and manifest.
    Run,
    /// Check stored files against the manifest checksums.
    Verify,
}

fn load_config(c: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    if let Some(e) = c.engine {
        cfg.engine = match e {
            EngineArg::Quantum => Engine::Quantum,
            EngineArg::Semiclassical => Engine::Semiclassical,
            EngineArg::Both => Engine::Both,
        };
    }
    if let Some(n) = c.n_spins {
        cfg.ensemble.n_spins = n;
    }
    if let Some(n) = c.n_j {
        cfg.ensemble.n_j = n;
    }
    if let Some(n) = c.n_traj {
        cfg.ensemble.n_trajectories = n;
    }
    if c.quench {
        cfg.drive.quench = true;
    }
    let root = c
        .out
        .clone()
        .or_else(|| cfg.output_root.clone())
        .ok_or_else(|| Error::Validation(format!("no output root: pass --out, set {OUTPUT_ENV} or output_root")))?;
    if c.workers == 0 {
        return Err(Error::Validation("--workers must be at least 1".into()));
    }
    cfg.validate()?;
    Ok((cfg, root))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    pipeline::worker_pool(workers)?.install(f)
}

fn simulate(cfg: &ExperimentConfig, root: &Path, workers: usize, engine: Engine) -> Result<()> {
    let mut cfg = cfg.clone();
    cfg.engine = engine;
    let m = pipeline::run_experiment(&cfg, root, workers, false)?;
    report_manifest(&m);
    Ok(())
}

fn report_manifest(m: &pipeline::RunManifest) {
    for j in &m.realizations {
        let failed = j.quantum.iter().chain(&j.semiclassical).filter(|o| o.status == pipeline::Status::Failed).count();
        println!(
            "J_{:03}  lambda_max={:.6e}  g_c={:.6e}  quantum={}  semiclassical={}  failed={}",
            j.index,
            j.lambda_max,
            j.g_c,
            j.quantum.len(),
            j.semiclassical.len(),
            failed
        );
    }
    for n in &m.notes {
        println!("note: {n}");
    }
    println!("files={}  wall_clock_s={:.2}", m.inventory.len(), m.wall_clock_s);
}

fn run(cli: Cli) -> Result<()> {
    let (cfg, root) = load_config(&cli.common)?;
    let workers = cli.common.workers;
    match cli.command {
        Command::BuildJ => {
            for r in pipeline::build_ensemble(&cfg, &root)? {
                println!("J_{:03}  lambda_max={:.6e}  g_c={:.6e}", r.index, r.j.lambda_max(), r.g_c);
            }
        }
        Command::Threshold { j } => {
            let r = match pipeline::load_realization(&root, j, &cfg) {
                Ok(r) => r,
                Err(_) => pipeline::realize(&cfg, j)?,
            };
            let cav = cfg.cavity_params();
            let omega = cfg.drive_params().omega_z0;
            let ev = stability_eigenvalues(r.g_c, &r.j.eigenvalues, omega, cav.delta_c, cav.kappa, 1.0)?;
            let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
            println!("g_c={:.16e}", r.g_c);
            println!("min_stability_eigenvalue={min:.6e}");
        }
        Command::RunQuantum => simulate(&cfg, &root, workers, Engine::Quantum)?,
        Command::RunSemiclassical => simulate(&cfg, &root, workers, Engine::Semiclassical)?,
        Command::EnumerateMinima => {
            for (i, n) in in_pool(workers, || pipeline::enumerate_minima_store(&cfg, &root))? {
                println!("J_{i:03}  minima={n}");
            }
        }
        Command::Analyze => {
            let s = in_pool(workers, || pipeline::analyze_store(&cfg, &root))?;
            print_json(&serde_json::json!({
                "n_j": s.n_j,
                "tc_bar": s.tc_bar,
                "parisi_std": s.parisi_std,
                "magnetization_std": s.magnetization_std,
                "mean_t_over_tc": s.mean_t_over_tc,
                "mean_k": s.mean_k,
            }));
        }
        Command::FitTemperature => {
            for (i, f) in in_pool(workers, || pipeline::fit_temperature_store(&cfg, &root))? {
                println!(
                    "J_{i:03}  T/Tc={:.6}  residual={:.3e}{}",
                    f.t_over_tc,
                    f.residual,
                    if f.unconstrained { "  (unconstrained)" } else { "" }
                );
            }
        }
        Command::Ultrametric => {
            for (i, u) in pipeline::ultrametric_store(&root)? {
                println!("J_{i:03}  <K>={:.6}  sigma_d={:.6}  triplets={}", u.mean, u.sigma_d, u.k.len());
            }
        }
        Command::Report { bins } => {
            for p in pipeline::write_report(&root, bins)? {
                println!("{}", p.display());
            }
        }
        Command::Run => {
            let m = pipeline::run_experiment(&cfg, &root, workers, true)?;
            report_manifest(&m);
        }
        Command::Verify => {
            let bad = pipeline::verify_manifest(&root)?;
            if !bad.is_empty() {
                for b in &bad {
                    eprintln!("checksum mismatch: {b}");
                }
                return Err(Error::Validation(format!("{} file(s) differ from the manifest", bad.len())));
            }
            println!("all files match the manifest");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
