//! End-to-end experiments: ensemble generation, trajectory batches,
//! store-based analysis and the run manifest.
//!
//! Disk layout under `output_root`:
//!
//! ```text
//! J_000/matrix.csv, layout.json, traj_0000.csv, sc_traj_0000.csv, energy_reference.csv
//! analysis/J_000/...  per-J statistics
//! analysis/...        ensemble aggregates and summary.json
//! manifest.json
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::cavity::{build_coupling_matrix, sample_positions, CavityParams, CouplingMatrix, Regime, SpinLayout};
use crate::config::{Engine, ExperimentConfig};
use crate::error::{Error, Result};
use crate::io::{
    fmt_f64, read_json, read_matrix_csv, read_series, sha256_file, write_classical_csv, write_json,
    write_matrix_csv, write_table, write_trajectory_csv,
};
use crate::landscape::{encoding_from_signs, enumerate_local_minima, nearest_minimum, semiclassical_energy_floor, LocalMinimum};
use crate::model::{critical_coupling, DriveParams, ModelCoefficients};
use crate::quantum::{evolve_trajectory, ground_state, QuantumModel, SpinTables};
use crate::rsb::{
    binder_ratio, fit_temperature, hierarchical_cluster, magnetization_distribution, moments, overlap_histogram,
    overlap_matrix, parisi_distribution, tc_bar, ultrametric_stats, Histogram, OverlapMatrix, ReplicaSet,
    ThermalFit,
};
use crate::seeds::{derive_seed, stream};
use crate::semiclassical::{integrate_semiclassical, ClassicalModel};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One disorder realization with its thresholds.
#[derive(Debug, Clone)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    pub regime: Regime,
    pub layout: SpinLayout,
    pub j: CouplingMatrix,
    /// Critical coupling for single spins.
    pub g_c: f64,
    /// Critical coupling for ensembles of the configured size.
    pub g_c_ensemble: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayoutFile {
    index: usize,
    seed: u64,
    regime: Regime,
    ensemble_size: u64,
    positions: Vec<[f64; 2]>,
    cavity: CavityParams,
    drive: DriveParams,
    g_c: f64,
    g_c_ensemble: f64,
    eigenvalues: Vec<f64>,
}

pub fn j_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("J_{index:03}"))
}

pub fn analysis_dir(root: &Path) -> PathBuf {
    root.join("analysis")
}

fn thresholds(j: &CouplingMatrix, config: &ExperimentConfig) -> Result<(f64, f64)> {
    let cav = config.cavity_params();
    let drive = config.drive_params();
    let g1 = critical_coupling(j.lambda_max(), drive.omega_z0, cav.delta_c, cav.kappa, 1.0)?;
    let gm = critical_coupling(j.lambda_max(), drive.omega_z0, cav.delta_c, cav.kappa, config.ensemble.ensemble_size as f64)?;
    Ok((g1, gm))
}

pub fn realize(config: &ExperimentConfig, index: usize) -> Result<Realization> {
    let seed = derive_seed(config.master_seed, &[stream::LAYOUT, index as u64]);
    let e = &config.ensemble;
    let layout = sample_positions(e.regime, e.n_spins, e.ensemble_size, seed)?;
    let j = build_coupling_matrix(&layout, &config.cavity_params())?;
    let (g_c, g_c_ensemble) = thresholds(&j, config)?;
    Ok(Realization { index, seed, regime: e.regime, layout, j, g_c, g_c_ensemble })
}

pub fn write_realization(root: &Path, r: &Realization, config: &ExperimentConfig) -> Result<()> {
    let dir = j_dir(root, r.index);
    write_matrix_csv(&dir.join("matrix.csv"), &r.j.entries)?;
    write_json(
        &dir.join("layout.json"),
        &LayoutFile {
            index: r.index,
            seed: r.seed,
            regime: r.regime,
            ensemble_size: r.layout.ensemble_size,
            positions: r.layout.positions.clone(),
            cavity: config.cavity_params(),
            drive: config.drive_params(),
            g_c: r.g_c,
            g_c_ensemble: r.g_c_ensemble,
            eigenvalues: r.j.eigenvalues.clone(),
        },
    )
}

/// Reload a stored realization; thresholds are recomputed under `config`.
pub fn load_realization(root: &Path, index: usize, config: &ExperimentConfig) -> Result<Realization> {
    let dir = j_dir(root, index);
    let meta: LayoutFile = read_json(&dir.join("layout.json"))?;
    let j = CouplingMatrix::from_matrix(read_matrix_csv(&dir.join("matrix.csv"))?)?;
    let layout = SpinLayout::new(meta.positions, meta.ensemble_size)?;
    let (g_c, g_c_ensemble) = thresholds(&j, config)?;
    Ok(Realization { index, seed: meta.seed, regime: meta.regime, layout, j, g_c, g_c_ensemble })
}

/// Indices of the `J_xxx` directories present under `root`, ascending.
pub fn stored_indices(root: &Path) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    if !root.is_dir() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(root)? {
        let name = entry?.file_name();
        if let Some(idx) = name.to_str().and_then(|s| s.strip_prefix("J_")).and_then(|s| s.parse().ok()) {
            out.push(idx);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Generate and persist every realization of the ensemble.
pub fn build_ensemble(config: &ExperimentConfig, root: &Path) -> Result<Vec<Realization>> {
    (0..config.ensemble.n_j)
        .map(|i| {
            let r = realize(config, i)?;
            write_realization(root, &r, config)?;
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Retried,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub index: usize,
    pub seed: u64,
    pub status: Status,
    /// Seed actually used when the first attempt failed.
    pub retry_seed: Option<u64>,
    pub jumps: usize,
    pub steps: u64,
    pub note: Option<String>,
}

pub fn traj_file(root: &Path, j: usize, r: usize) -> PathBuf {
    j_dir(root, j).join(format!("traj_{r:04}.csv"))
}

pub fn sc_traj_file(root: &Path, j: usize, r: usize) -> PathBuf {
    j_dir(root, j).join(format!("sc_traj_{r:04}.csv"))
}

/// Run `attempt(seed)` once, then once more with a derived seed.
fn with_retry<F>(index: usize, seed: u64, retry: u64, attempt: F) -> TrajectoryOutcome
where
    F: Fn(u64) -> Result<(usize, u64)>,
{
    match attempt(seed) {
        Ok((jumps, steps)) => {
            TrajectoryOutcome { index, seed, status: Status::Ok, retry_seed: None, jumps, steps, note: None }
        }
        Err(first) => match attempt(retry) {
            Ok((jumps, steps)) => TrajectoryOutcome {
                index,
                seed,
                status: Status::Retried,
                retry_seed: Some(retry),
                jumps,
                steps,
                note: Some(first.to_string()),
            },
            Err(second) => TrajectoryOutcome {
                index,
                seed,
                status: Status::Failed,
                retry_seed: Some(retry),
                jumps: 0,
                steps: 0,
                note: Some(format!("{first}; retry: {second}")),
            },
        },
    }
}

/// All quantum trajectories of one realization, written as they finish.
pub fn run_quantum(config: &ExperimentConfig, root: &Path, r: &Realization) -> Vec<TrajectoryOutcome> {
    let tables = SpinTables::new(&r.j);
    let model = QuantumModel { tables: &tables, cavity: config.cavity_params(), drive: config.drive_params(), g_c: r.g_c };
    let sim = config.sim_config();
    let master = config.master_seed;
    (0..config.ensemble.n_trajectories)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(master, &[stream::TRAJECTORY, r.index as u64, t as u64]);
            let retry = derive_seed(master, &[stream::RETRY, stream::TRAJECTORY, r.index as u64, t as u64]);
            with_retry(t, seed, retry, |s| {
                let rec = evolve_trajectory(&model, &sim, s)?;
                write_trajectory_csv(&traj_file(root, r.index, t), &rec)?;
                Ok((rec.jumps.len(), rec.steps))
            })
        })
        .collect()
}

pub fn run_semiclassical(config: &ExperimentConfig, root: &Path, r: &Realization) -> Vec<TrajectoryOutcome> {
    let model = ClassicalModel {
        j: &r.j,
        cavity: config.cavity_params(),
        drive: config.drive_params(),
        g_c: r.g_c_ensemble,
        m: config.ensemble.ensemble_size as f64,
    };
    let sde = config.sde_config();
    let master = config.master_seed;
    (0..config.ensemble.n_trajectories)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(master, &[stream::SEMICLASSICAL, r.index as u64, t as u64]);
            let retry = derive_seed(master, &[stream::RETRY, stream::SEMICLASSICAL, r.index as u64, t as u64]);
            with_retry(t, seed, retry, |s| {
                let rec = integrate_semiclassical(&model, &sde, s)?;
                write_classical_csv(&sc_traj_file(root, r.index, t), &rec)?;
                Ok((0, rec.steps))
            })
        })
        .collect()
}

/// `E_0(t)` of the single-spin Hamiltonian at each sample time, plus the
/// product-state floor at the final time.
pub fn energy_reference(config: &ExperimentConfig, root: &Path, r: &Realization) -> Result<f64> {
    let tables = SpinTables::new(&r.j);
    let sim = config.sim_config();
    let cav = config.cavity_params();
    let drive = config.drive_params();
    let times: Vec<f64> = (0..sim.n_samples()).map(|k| k as f64 * sim.sample_interval).collect();
    let seed = derive_seed(config.master_seed, &[stream::FLOOR, r.index as u64]);
    let e0: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let c = ModelCoefficients::at_time(t, &drive, &cav, r.g_c)?;
            Ok(ground_state(&tables, &c, seed, 1e-10)?.energy)
        })
        .collect::<Result<_>>()?;
    let last = *times.last().expect("at least one sample");
    let c = ModelCoefficients::at_time(last, &drive, &cav, r.g_c)?;
    let floor = semiclassical_energy_floor(&r.j.entries, &c, 1.0, config.analysis.floor_samples, seed, None)?.energy;
    let rows = times.iter().zip(&e0).map(|(t, e)| vec![fmt_f64(t * 1e6), fmt_f64(*e)]).collect::<Vec<_>>();
    write_table(&j_dir(root, r.index).join("energy_reference.csv"), &["t_us".into(), "e0".into()], &rows)?;
    Ok(floor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JManifest {
    pub index: usize,
    pub seed: u64,
    pub g_c: f64,
    pub lambda_max: f64,
    pub floor: Option<f64>,
    pub quantum: Vec<TrajectoryOutcome>,
    pub semiclassical: Vec<TrajectoryOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub workers: usize,
    pub wall_clock_s: f64,
    pub realizations: Vec<JManifest>,
    pub notes: Vec<String>,
    /// Every file under the output root except the manifest itself.
    pub inventory: Vec<FileEntry>,
}

pub const MANIFEST: &str = "manifest.json";

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

pub fn inventory(root: &Path) -> Result<Vec<FileEntry>> {
    let mut files = Vec::new();
    walk(root, &mut files)?;
    let mut out: Vec<FileEntry> = files
        .iter()
        .filter(|p| p.as_path() != root.join(MANIFEST))
        .map(|p| {
            let rel = p.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
            Ok(FileEntry { path: rel, sha256: sha256_file(p)?, bytes: std::fs::metadata(p)?.len() })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// Files whose checksum no longer matches the manifest, or that vanished.
pub fn verify_manifest(root: &Path) -> Result<Vec<String>> {
    let m: RunManifest = read_json(&root.join(MANIFEST))?;
    let mut bad = Vec::new();
    for f in &m.inventory {
        let p = root.join(&f.path);
        if !p.is_file() || sha256_file(&p)? != f.sha256 {
            bad.push(f.path.clone());
        }
    }
    Ok(bad)
}

pub type Pool = rayon::ThreadPool;

/// Thread pool with exactly `workers` threads.
pub fn worker_pool(workers: usize) -> Result<Pool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))
}

/// Simulate the configured engines over a fresh ensemble and write the
/// manifest. `analyze` additionally runs the full analysis suite.
pub fn run_experiment(config: &ExperimentConfig, root: &Path, workers: usize, analyze: bool) -> Result<RunManifest> {
    config.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(root)?;
    let pool = worker_pool(workers)?;
    pool.install(|| {
        let reals = build_ensemble(config, root)?;
        let mut realizations = Vec::with_capacity(reals.len());
        let mut notes = Vec::new();
        for r in &reals {
            let quantum = if config.engine.quantum() { run_quantum(config, root, r) } else { Vec::new() };
            let semiclassical =
                if config.engine.semiclassical() { run_semiclassical(config, root, r) } else { Vec::new() };
            for (tag, o) in quantum.iter().map(|o| ("quantum", o)).chain(semiclassical.iter().map(|o| ("semiclassical", o))) {
                if o.status == Status::Failed {
                    notes.push(format!("J_{:03} {tag} trajectory {} failed and is excluded", r.index, o.index));
                }
            }
            let floor = if config.sim.record_energy && config.engine.quantum() {
                Some(energy_reference(config, root, r)?)
            } else {
                None
            };
            realizations.push(JManifest {
                index: r.index,
                seed: r.seed,
                g_c: r.g_c,
                lambda_max: r.j.lambda_max(),
                floor,
                quantum,
                semiclassical,
            });
        }
        if analyze {
            analyze_store(config, root)?;
        }
        let manifest = RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config.hash(),
            master_seed: config.master_seed,
            workers: pool.current_num_threads(),
            wall_clock_s: start.elapsed().as_secs_f64(),
            realizations,
            notes,
            inventory: inventory(root)?,
        };
        write_json(&root.join(MANIFEST), &manifest)?;
        Ok(manifest)
    })
}

/// Steady-state summary of one realization's replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JAnalysis {
    pub index: usize,
    pub engine: String,
    pub n_replicas: usize,
    pub lambda_max: f64,
    pub n_minima: usize,
    /// Fractions of steady states at Hamming distance 0 and 1 from a minimum.
    pub frac_d0: f64,
    pub frac_d1: f64,
    /// Trajectories whose steady state is classical (quantum engine only).
    pub frac_classical: Option<f64>,
    pub ultrametric_mean_k: Option<f64>,
    pub sigma_d: Option<f64>,
    pub binder_steady: Option<f64>,
    pub thermal: Option<ThermalFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub n_j: usize,
    pub tc_bar: f64,
    pub steady_time_us: f64,
    pub parisi_std: f64,
    pub magnetization_std: f64,
    pub mean_t_over_tc: Option<f64>,
    pub mean_k: Option<f64>,
    /// `(t_us, Binder ratio of the pooled overlaps)`.
    pub binder: Vec<(f64, Option<f64>)>,
    pub per_j: Vec<JAnalysis>,
}

/// Entropy and polarization thresholds for a classical steady state.
pub const CLASSICAL_ENTROPY: f64 = 1e-2;
pub const CLASSICAL_POLARIZATION: f64 = 0.99;

struct Loaded {
    real: Realization,
    engine: &'static str,
    replicas: ReplicaSet,
    classical: Option<Vec<bool>>,
}

fn load_replicas(config: &ExperimentConfig, root: &Path, index: usize) -> Result<Option<Loaded>> {
    let real = load_realization(root, index, config)?;
    let n_traj = config.ensemble.n_trajectories;
    for (engine, file) in [("quantum", traj_file as fn(&Path, usize, usize) -> PathBuf), ("semiclassical", sc_traj_file)] {
        let paths: Vec<PathBuf> = (0..n_traj).map(|t| file(root, index, t)).filter(|p| p.is_file()).collect();
        if paths.is_empty() {
            continue;
        }
        let mut times = Vec::new();
        let mut x = Vec::new();
        let mut classical = Vec::new();
        for p in &paths {
            let (t, xs) = read_series(p, "x")?;
            if engine == "quantum" {
                let (_, s) = read_series(p, "entropy")?;
                let last_s = s.last().cloned().unwrap_or_default();
                let last_x = xs.last().cloned().unwrap_or_default();
                classical.push(
                    last_s.iter().all(|v| *v < CLASSICAL_ENTROPY)
                        && last_x.iter().all(|v| v.abs() > CLASSICAL_POLARIZATION),
                );
            }
            times = t;
            x.push(xs);
        }
        let replicas = ReplicaSet::new(times, x)?;
        return Ok(Some(Loaded { real, engine, replicas, classical: (engine == "quantum").then_some(classical) }));
    }
    Ok(None)
}

fn hist_rows(h: &Histogram) -> Vec<Vec<String>> {
    (0..h.centers.len())
        .map(|k| vec![fmt_f64(h.centers[k]), fmt_f64(h.probabilities[k]), fmt_f64(h.errors[k])])
        .collect()
}

fn write_hist(path: &Path, h: &Histogram) -> Result<()> {
    write_table(path, &["center".into(), "probability".into(), "error".into()], &hist_rows(h))
}

fn write_values(path: &Path, name: &str, v: &[f64]) -> Result<()> {
    write_table(path, &[name.to_string()], &v.iter().map(|x| vec![fmt_f64(*x)]).collect::<Vec<_>>())
}

fn write_overlap_matrix(path: &Path, m: &OverlapMatrix) -> Result<()> {
    write_matrix_csv(path, &m.q)
}

fn t_label(t_us: f64) -> String {
    format!("{}", t_us.round() as i64)
}

/// Uniform histogram of `K` values with 50 bins on `[0, max K]`.
fn k_histogram(k: &[f64]) -> Vec<Vec<String>> {
    const BINS: usize = 50;
    let max = k.iter().copied().fold(0.0f64, f64::max);
    let width = if max > 0.0 { max / BINS as f64 } else { 1.0 };
    let mut counts = vec![0u64; BINS];
    for v in k {
        counts[((v / width) as usize).min(BINS - 1)] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(b, c)| vec![fmt_f64(b as f64 * width), fmt_f64((b + 1) as f64 * width), c.to_string()])
        .collect()
}

/// All statistics computed from the trajectories already in `root`.
pub fn analyze_store(config: &ExperimentConfig, root: &Path) -> Result<AnalysisSummary> {
    let indices = stored_indices(root)?;
    let loaded: Vec<Loaded> = indices
        .iter()
        .map(|&i| load_replicas(config, root, i))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .filter(|l| l.replicas.n_replicas() >= 2)
        .collect();
    if loaded.is_empty() {
        return Err(Error::validation(format!(
            "no trajectory store with at least two replicas under {}",
            root.display()
        )));
    }
    let a_root = analysis_dir(root);
    let lambda: Vec<f64> = loaded.iter().map(|l| l.real.j.lambda_max()).collect();
    let tc = tc_bar(&lambda, config.ensemble.regime)?;
    let steady_us = config.analysis.steady_time_us;
    let steady = steady_us * 1e-6;
    let boot = config.analysis.bootstrap_samples;
    let snaps = &config.analysis.snapshot_times_us;

    struct PerJ {
        summary: JAnalysis,
        steady_hist: Histogram,
        magnet: Histogram,
        snap_hists: Vec<Histogram>,
    }

    let per_j: Vec<PerJ> = loaded
        .par_iter()
        .map(|l| -> Result<PerJ> {
            let idx = l.real.index;
            let n = l.replicas.n_spins();
            let dir = a_root.join(format!("J_{idx:03}"));
            let bseed = |tag: u64| derive_seed(config.master_seed, &[stream::BOOTSTRAP, idx as u64, tag]);

            let m = overlap_matrix(&l.replicas, steady)?;
            let steady_hist = overlap_histogram(&m, n, true, boot, bseed(0))?;
            write_overlap_matrix(&dir.join("overlap_matrix.csv"), &m)?;
            write_hist(&dir.join("overlap_hist.csv"), &steady_hist)?;
            write_values(&dir.join("overlap_raw.csv"), "q", &steady_hist.values)?;

            let tree = hierarchical_cluster(&m);
            write_values(
                &dir.join("cluster_order.csv"),
                "replica",
                &tree.order.iter().map(|&v| v as f64).collect::<Vec<_>>(),
            )?;
            let parents = tree.parents();
            let rows: Vec<Vec<String>> = (0..parents.len())
                .map(|node| {
                    let (height, size) = if node < tree.n_leaves {
                        (0.0, 1)
                    } else {
                        let mg = tree.merges[node - tree.n_leaves];
                        (mg.height, mg.size)
                    };
                    vec![
                        node.to_string(),
                        parents[node].map_or(String::new(), |p| p.to_string()),
                        fmt_f64(height),
                        size.to_string(),
                    ]
                })
                .collect();
            write_table(&dir.join("dendrogram.csv"), &["node".into(), "parent".into(), "height".into(), "size".into()], &rows)?;
            let order = &tree.order;
            let reordered = nalgebra::DMatrix::from_fn(order.len(), order.len(), |a, b| m.q[(order[a], order[b])]);
            write_matrix_csv(&dir.join("overlap_matrix_clustered.csv"), &reordered)?;

            let snapshot = l.replicas.snapshot(steady);
            let magnet = magnetization_distribution(&snapshot, boot, bseed(1))?;
            write_hist(&dir.join("magnetization.csv"), &magnet)?;

            let mut snap_hists = Vec::with_capacity(snaps.len());
            for (k, &t_us) in snaps.iter().enumerate() {
                let ms = overlap_matrix(&l.replicas, t_us * 1e-6)?;
                let h = overlap_histogram(&ms, n, true, boot, bseed(2 + k as u64))?;
                write_hist(&dir.join(format!("overlap_hist_t{}.csv", t_label(t_us))), &h)?;
                snap_hists.push(h);
            }

            let minima = enumerate_local_minima(&l.real.j.entries)?;
            let mut mins: Vec<LocalMinimum> = minima.clone();
            let (mut d0, mut d1) = (0usize, 0usize);
            let mut state_rows = Vec::new();
            for (rep, x) in snapshot.iter().enumerate() {
                let enc = encoding_from_signs(x);
                let (mi, d) = nearest_minimum(enc, n, &minima)?;
                if d <= config.analysis.minima_cutoff {
                    mins[mi].occurrence_count += 1;
                }
                d0 += usize::from(d == 0);
                d1 += usize::from(d == 1);
                state_rows.push(vec![rep.to_string(), enc.to_string(), mins[mi].encoding.to_string(), d.to_string()]);
            }
            write_table(
                &dir.join("steady_states.csv"),
                &["replica".into(), "encoding".into(), "nearest_minimum".into(), "distance".into()],
                &state_rows,
            )?;
            let min_rows: Vec<Vec<String>> = mins
                .iter()
                .map(|m| {
                    vec![m.encoding.to_string(), m.z2_partner.to_string(), fmt_f64(m.energy), m.occurrence_count.to_string()]
                })
                .collect();
            write_table(
                &dir.join("minima.csv"),
                &["encoding".into(), "z2_partner".into(), "energy".into(), "count".into()],
                &min_rows,
            )?;

            let ultra = if m.n_replicas() >= 3 { Some(ultrametric_stats(&m)?) } else { None };
            if let Some(u) = &ultra {
                write_table(&dir.join("ultrametric_k_hist.csv"), &["k_lo".into(), "k_hi".into(), "count".into()], &k_histogram(&u.k))?;
            }
            let thermal = fit_temperature(&steady_hist, &l.real.j.entries, tc).ok();
            let r = snapshot.len() as f64;
            let summary = JAnalysis {
                index: idx,
                engine: l.engine.to_string(),
                n_replicas: snapshot.len(),
                lambda_max: l.real.j.lambda_max(),
                n_minima: minima.len(),
                frac_d0: d0 as f64 / r,
                frac_d1: d1 as f64 / r,
                frac_classical: l.classical.as_ref().map(|c| c.iter().filter(|&&b| b).count() as f64 / c.len() as f64),
                ultrametric_mean_k: ultra.as_ref().map(|u| u.mean),
                sigma_d: ultra.as_ref().map(|u| u.sigma_d),
                binder_steady: binder_ratio(&steady_hist.values),
                thermal,
            };
            Ok(PerJ { summary, steady_hist, magnet, snap_hists })
        })
        .collect::<Result<_>>()?;

    let parisi = parisi_distribution(&per_j.iter().map(|p| p.steady_hist.clone()).collect::<Vec<_>>())?;
    write_hist(&a_root.join("parisi.csv"), &parisi)?;
    let magnet = parisi_distribution(&per_j.iter().map(|p| p.magnet.clone()).collect::<Vec<_>>())?;
    write_hist(&a_root.join("magnetization.csv"), &magnet)?;
    let mut binder = Vec::with_capacity(snaps.len());
    for (k, &t_us) in snaps.iter().enumerate() {
        let hs: Vec<Histogram> = per_j.iter().map(|p| p.snap_hists[k].clone()).collect();
        let agg = parisi_distribution(&hs)?;
        write_hist(&a_root.join(format!("parisi_t{}.csv", t_label(t_us))), &agg)?;
        binder.push((t_us, binder_ratio(&agg.values)));
    }
    write_table(
        &a_root.join("binder.csv"),
        &["t_us".into(), "binder".into()],
        &binder.iter().map(|(t, b)| vec![fmt_f64(*t), b.map_or(String::new(), fmt_f64)]).collect::<Vec<_>>(),
    )?;

    let summaries: Vec<JAnalysis> = per_j.into_iter().map(|p| p.summary).collect();
    let opt = |v: Option<f64>| v.map_or(String::new(), fmt_f64);
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.index.to_string(),
                s.n_replicas.to_string(),
                fmt_f64(s.lambda_max),
                s.n_minima.to_string(),
                fmt_f64(s.frac_d0),
                fmt_f64(s.frac_d1),
                opt(s.frac_classical),
                opt(s.ultrametric_mean_k),
                opt(s.binder_steady),
                opt(s.thermal.as_ref().map(|t| t.t_over_tc)),
                s.thermal.as_ref().map_or(String::new(), |t| t.unconstrained.to_string()),
            ]
        })
        .collect();
    let header: Vec<String> = [
        "j", "n_replicas", "lambda_max", "n_minima", "frac_d0", "frac_d1", "frac_classical", "mean_k", "binder",
        "t_fit_over_tc", "fit_unconstrained",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    write_table(&a_root.join("per_j.csv"), &header, &rows)?;

    let fits: Vec<f64> =
        summaries.iter().filter_map(|s| s.thermal.as_ref()).filter(|t| !t.unconstrained).map(|t| t.t_over_tc).collect();
    let ks: Vec<f64> = summaries.iter().filter_map(|s| s.ultrametric_mean_k).collect();
    let summary = AnalysisSummary {
        n_j: summaries.len(),
        tc_bar: tc,
        steady_time_us: steady_us,
        parisi_std: moments(&parisi.values).1,
        magnetization_std: moments(&magnet.values).1,
        mean_t_over_tc: (!fits.is_empty()).then(|| fits.iter().sum::<f64>() / fits.len() as f64),
        mean_k: (!ks.is_empty()).then(|| ks.iter().sum::<f64>() / ks.len() as f64),
        binder,
        per_j: summaries,
    };
    write_json(&a_root.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Re-bin the stored steady overlaps and magnetizations into `bins` uniform
/// bins on `[-1, 1]`; returns the written file paths.
pub fn write_report(root: &Path, bins: usize) -> Result<Vec<PathBuf>> {
    if bins == 0 {
        return Err(Error::validation("report needs at least one bin"));
    }
    let a_root = analysis_dir(root);
    let mut q = Vec::new();
    let mut mags = Vec::new();
    for idx in stored_indices(root)? {
        let dir = a_root.join(format!("J_{idx:03}"));
        let raw = dir.join("overlap_raw.csv");
        if raw.is_file() {
            let (_, rows) = crate::io::read_table(&raw)?;
            q.extend(rows.iter().filter_map(|r| r[0].parse::<f64>().ok()));
        }
        let states = dir.join("steady_states.csv");
        if states.is_file() {
            let (_, rows) = crate::io::read_table(&states)?;
            let n = crate::io::read_matrix_csv(&j_dir(root, idx).join("matrix.csv"))?.nrows();
            for r in rows {
                let enc: u32 = r[1].parse().map_err(|_| Error::validation("bad steady-state encoding"))?;
                let down = enc.count_ones() as f64;
                mags.push((n as f64 - 2.0 * down) / n as f64);
            }
        }
    }
    if q.is_empty() {
        return Err(Error::validation("no analysis results to report; run `analyze` first"));
    }
    let rebin = |v: &[f64]| -> Vec<Vec<String>> {
        let width = 2.0 / bins as f64;
        let mut c = vec![0u64; bins];
        for x in v {
            c[(((x + 1.0) / width) as usize).min(bins - 1)] += 1;
        }
        let total = v.len().max(1) as f64;
        (0..bins)
            .map(|b| {
                vec![fmt_f64(-1.0 + (b as f64 + 0.5) * width), c[b].to_string(), fmt_f64(c[b] as f64 / total)]
            })
            .collect()
    };
    let header = vec!["center".to_string(), "count".to_string(), "probability".to_string()];
    let dir = root.join("report");
    let qp = dir.join("overlap_bins.csv");
    let mp = dir.join("magnetization_bins.csv");
    write_table(&qp, &header, &rebin(&q))?;
    write_table(&mp, &header, &rebin(&mags))?;
    Ok(vec![qp, mp])
}

fn read_histogram(dir: &Path) -> Result<Histogram> {
    let (_, rows) = crate::io::read_table(&dir.join("overlap_hist.csv"))?;
    let num = |c: &str| c.parse::<f64>().map_err(|_| Error::validation(format!("bad number `{c}` in histogram")));
    let mut h = Histogram { centers: vec![], probabilities: vec![], errors: vec![], values: vec![] };
    for r in &rows {
        h.centers.push(num(&r[0])?);
        h.probabilities.push(num(&r[1])?);
        h.errors.push(num(&r[2])?);
    }
    let (_, raw) = crate::io::read_table(&dir.join("overlap_raw.csv"))?;
    h.values = raw.iter().map(|r| num(&r[0])).collect::<Result<_>>()?;
    Ok(h)
}

/// Analysed realizations: `(index, per-J analysis directory)`.
fn analysed(root: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let a_root = analysis_dir(root);
    let out: Vec<(usize, PathBuf)> = stored_indices(root)?
        .into_iter()
        .map(|i| (i, a_root.join(format!("J_{i:03}"))))
        .filter(|(_, d)| d.join("overlap_hist.csv").is_file())
        .collect();
    if out.is_empty() {
        return Err(Error::validation(format!("no analysed realizations under {}; run `analyze` first", root.display())));
    }
    Ok(out)
}

/// Refit the equilibrium temperature of every analysed realization;
/// writes `analysis/thermal_fit.csv`.
pub fn fit_temperature_store(config: &ExperimentConfig, root: &Path) -> Result<Vec<(usize, ThermalFit)>> {
    let items = analysed(root)?;
    let reals: Vec<Realization> = items.iter().map(|(i, _)| load_realization(root, *i, config)).collect::<Result<_>>()?;
    let lambda: Vec<f64> = reals.iter().map(|r| r.j.lambda_max()).collect();
    let tc = tc_bar(&lambda, config.ensemble.regime)?;
    let fits: Vec<(usize, ThermalFit)> = items
        .par_iter()
        .zip(&reals)
        .map(|((i, dir), r)| Ok((*i, fit_temperature(&read_histogram(dir)?, &r.j.entries, tc)?)))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<String>> = fits
        .iter()
        .map(|(i, f)| {
            vec![i.to_string(), fmt_f64(f.t_fit), fmt_f64(f.t_over_tc), fmt_f64(f.residual), f.unconstrained.to_string()]
        })
        .collect();
    let header = ["j", "t_fit", "t_over_tc", "residual", "unconstrained"].map(String::from);
    write_table(&analysis_dir(root).join("thermal_fit.csv"), &header, &rows)?;
    Ok(fits)
}

/// Ultrametric statistics of every analysed realization from its stored
/// steady overlap matrix; writes `analysis/ultrametric.csv`.
pub fn ultrametric_store(root: &Path) -> Result<Vec<(usize, crate::rsb::UltrametricStats)>> {
    let items = analysed(root)?;
    let stats: Vec<(usize, crate::rsb::UltrametricStats)> = items
        .iter()
        .map(|(i, dir)| {
            let q = read_matrix_csv(&dir.join("overlap_matrix.csv"))?;
            Ok((*i, ultrametric_stats(&OverlapMatrix { q, t: f64::NAN })?))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|(i, u)| vec![i.to_string(), u.k.len().to_string(), fmt_f64(u.mean), fmt_f64(u.sigma_d)])
        .collect();
    let header = ["j", "n_triplets", "mean_k", "sigma_d"].map(String::from);
    write_table(&analysis_dir(root).join("ultrametric.csv"), &header, &rows)?;
    Ok(stats)
}

/// Enumerate the local minima of every stored realization into
/// `J_xxx/local_minima.csv`; returns the counts.
pub fn enumerate_minima_store(config: &ExperimentConfig, root: &Path) -> Result<Vec<(usize, usize)>> {
    let indices = stored_indices(root)?;
    if indices.is_empty() {
        return Err(Error::validation(format!("no J realizations under {}; run `build-j` first", root.display())));
    }
    indices
        .par_iter()
        .map(|&i| {
            let r = load_realization(root, i, config)?;
            let minima = enumerate_local_minima(&r.j.entries)?;
            let rows: Vec<Vec<String>> = minima
                .iter()
                .map(|m| vec![m.encoding.to_string(), m.z2_partner.to_string(), fmt_f64(m.energy)])
                .collect();
            let header = ["encoding", "z2_partner", "energy"].map(String::from);
            write_table(&j_dir(root, i).join("local_minima.csv"), &header, &rows)?;
            Ok((i, minima.len()))
        })
        .collect()
}

/// Default engine tag used in file names.
pub fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Quantum => "quantum",
        Engine::Semiclassical => "semiclassical",
        Engine::Both => "both",
    }
}
