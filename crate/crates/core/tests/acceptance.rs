//! Acceptance criteria for the whole toolkit, one PASS/FAIL line each.
//!
//! The default scale fits a single-core CI machine; set
//! `CQED_ACCEPTANCE=full` for the full ensemble sizes. Pass criterion
//! numbers as arguments to run a subset, e.g. `-- 2 7`. The exit status is
//! nonzero on a failing criterion only with `CQED_ACCEPTANCE_STRICT=1`.

use ccqed_core::cavity::{
    build_coupling_matrix, green_function, mode_sum, order_for_tail, sample_positions, CavityParams, CouplingMatrix,
    ModeSet, Regime,
};
use ccqed_core::landscape::{encoding_from_signs, enumerate_local_minima, nearest_minimum, semiclassical_energy_floor};
use ccqed_core::model::{critical_coupling, rate_estimates, stability_eigenvalues, DriveParams, ModelCoefficients};
use ccqed_core::quantum::lindblad::{lindblad_reference, projector, trace_distance, CMatrix};
use ccqed_core::quantum::{entanglement_entropy, evolve_trajectory, initial_state, PureState, QuantumModel, SimConfig, SpinTables, Stepper};
use ccqed_core::quantum::step::EffectiveTerms;
use ccqed_core::rsb::{
    binder_ratio, bootstrap_histogram, fit_temperature, magnetization_distribution, moments, overlap_histogram,
    parisi_distribution, tc_bar, thermal_overlap, ultrametric_stats, Histogram, OverlapMatrix,
};
use ccqed_core::semiclassical::{integrate_semiclassical, ClassicalModel, SdeConfig};
use ccqed_core::seeds::{derive_seed, rng_from_seed};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

const MASTER: u64 = 20_240_601;

// Tolerances, as stated by the criteria.
const THRESHOLD_REL_TOL: f64 = 1e-10;
const TRACE_DISTANCE_MAX: f64 = 0.05;
const GREEN_REL_TOL: f64 = 1e-6;
const CLASSICAL_FRACTION_MIN: f64 = 0.90;
const ENTROPY_MAX: f64 = 1e-2;
const POLARIZATION_MIN: f64 = 0.99;
const NEAR_MINIMUM_FRACTION_MIN: f64 = 0.5;
const MAGNETIZATION_STD_RANGE: (f64, f64) = (0.2, 0.45);
const FERRO_MASS_MIN: f64 = 0.99;
const QUENCH_STD_REL_TOL: f64 = 0.30;
const FIT_REL_TOL: f64 = 0.05;
const DETECTION_RATE_RANGE_HZ: (f64, f64) = (1e6, 4e6);
/// Relative margin for "strictly below the floor".
const BARRIER_MARGIN: f64 = 1e-6;

struct Scale {
    full: bool,
    lindblad_traj: usize,
    steady_n: usize,
    steady_traj: usize,
    parisi_n: usize,
    parisi_j: usize,
    parisi_traj: usize,
    phase_n: usize,
    phase_j: usize,
    phase_traj: usize,
    ultra_j: usize,
    ultra_traj: usize,
    barrier_n: usize,
}

impl Scale {
    fn from_env() -> Self {
        if std::env::var("CQED_ACCEPTANCE").is_ok_and(|v| v == "full") {
            Scale {
                full: true,
                lindblad_traj: 1000,
                steady_n: 15,
                steady_traj: 200,
                parisi_n: 15,
                parisi_j: 100,
                parisi_traj: 200,
                phase_n: 15,
                phase_j: 100,
                phase_traj: 200,
                ultra_j: 30,
                ultra_traj: 100,
                barrier_n: 15,
            }
        } else {
            Scale {
                full: false,
                lindblad_traj: 1000,
                steady_n: 10,
                steady_traj: 200,
                parisi_n: 8,
                parisi_j: 16,
                parisi_traj: 40,
                phase_n: 8,
                phase_j: 8,
                phase_traj: 30,
                ultra_j: 8,
                ultra_traj: 20,
                barrier_n: 10,
            }
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn make_j(regime: Regime, n: usize, seed: u64) -> CouplingMatrix {
    build_coupling_matrix(&sample_positions(regime, n, 1, seed).unwrap(), &CavityParams::default()).unwrap()
}

fn g_c(j: &CouplingMatrix, drive: &DriveParams, m: f64) -> f64 {
    let p = CavityParams::default();
    critical_coupling(j.lambda_max(), drive.omega_z0, p.delta_c, p.kappa, m).unwrap()
}

/// Final `<sigma^x>` and entropies of `n_traj` quantum trajectories on `j`.
fn steady_quantum(j: &CouplingMatrix, drive: DriveParams, n_traj: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let tables = SpinTables::new(j);
    let p = CavityParams::default();
    let model = QuantumModel { tables: &tables, cavity: p, drive, g_c: g_c(j, &drive, 1.0) };
    let sim = SimConfig { sample_interval: 100e-6, ..SimConfig::for_cavity(&p) };
    (0..n_traj as u64)
        .into_par_iter()
        .map(|t| {
            let r = evolve_trajectory(&model, &sim, derive_seed(seed, &[t])).unwrap();
            (r.x.last().unwrap().clone(), r.entropy.last().unwrap().clone())
        })
        .collect()
}

fn criterion_1(_: &Scale) -> Outcome {
    let p = CavityParams::default();
    let omega = DriveParams::default().omega_z0;
    let min_stab = |g: f64, j: &CouplingMatrix| {
        stability_eigenvalues(g, &j.eigenvalues, omega, p.delta_c, p.kappa, 1.0).unwrap().into_iter().fold(f64::INFINITY, f64::min)
    };
    let mut worst = 0.0f64;
    for k in 0..20 {
        let j = make_j(Regime::SpinGlass, 15, derive_seed(MASTER, &[1, k]));
        let gc = critical_coupling(j.lambda_max(), omega, p.delta_c, p.kappa, 1.0).unwrap();
        let (mut lo, mut hi) = (0.0, 1.0);
        while min_stab(hi, &j) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if min_stab(mid, &j) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.max((gc / (0.5 * (lo + hi)) - 1.0).abs());
    }
    outcome(worst < THRESHOLD_REL_TOL, format!("worst relative mismatch {worst:.2e} over 20 J (N = 15)"))
}

fn criterion_2(s: &Scale) -> Outcome {
    let p = CavityParams::default();
    let j = make_j(Regime::SpinGlass, 3, derive_seed(MASTER, &[2]));
    // Default ramp compressed by 8 so it fits in 0.5 ms.
    let drive = DriveParams { ramp_start: 12.5e-6, ramp_end: 87.5e-6, ..DriveParams::default() };
    let gc = g_c(&j, &drive, 1.0);
    let tables = SpinTables::new(&j);
    let model = QuantumModel { tables: &tables, cavity: p, drive, g_c: gc };
    let sim = SimConfig {
        t_final: 500e-6,
        sample_interval: 100e-6,
        record_states: true,
        ..SimConfig::for_cavity(&p)
    };
    let checkpoints = [100e-6, 200e-6, 300e-6, 400e-6, 500e-6];
    let states: Vec<Vec<PureState>> = (0..s.lindblad_traj as u64)
        .into_par_iter()
        .map(|t| evolve_trajectory(&model, &sim, derive_seed(MASTER, &[2, t])).unwrap().states.unwrap())
        .collect();
    let rho0 = projector(&initial_state(3, 15).unwrap().amps);
    let exact =
        lindblad_reference(&j, |t| ModelCoefficients::at_time(t, &drive, &p, gc), rho0, &checkpoints, 1e-8).unwrap();
    let mut worst = 0.0f64;
    for (k, rho) in exact.iter().enumerate() {
        let mut avg = CMatrix::zeros(8, 8);
        for traj in &states {
            avg += projector(&traj[k + 1].amps);
        }
        avg /= Complex64::new(states.len() as f64, 0.0);
        worst = worst.max(trace_distance(&avg, rho));
    }
    outcome(
        worst < TRACE_DISTANCE_MAX,
        format!("max trace distance {worst:.4} at 5 checkpoints ({} trajectories)", s.lindblad_traj),
    )
}

fn criterion_3(_: &Scale) -> Outcome {
    let mut rng = rng_from_seed(derive_seed(MASTER, &[3]));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let r = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let rp = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let alpha = Complex64::new(rng.random_range(0.5..1.5), rng.random_range(0.0..PI / 2.0));
        let order = order_for_tail(alpha.re, 1e-8);
        let closed = green_function(r, rp, alpha).unwrap();
        let sum = mode_sum(r, rp, alpha, order, ModeSet::All);
        worst = worst.max((closed - sum).norm() / closed.norm());
    }
    outcome(worst < GREEN_REL_TOL, format!("worst relative error {worst:.2e} over 100 triples"))
}

fn criterion_4(s: &Scale) -> Outcome {
    let n = s.steady_n;
    let j = make_j(Regime::SpinGlass, n, derive_seed(MASTER, &[4]));
    let finals = steady_quantum(&j, DriveParams::default(), s.steady_traj, derive_seed(MASTER, &[4, 1]));
    let classical = finals
        .iter()
        .filter(|(x, e)| e.iter().all(|v| *v < ENTROPY_MAX) && x.iter().all(|v| v.abs() > POLARIZATION_MIN))
        .count() as f64
        / finals.len() as f64;
    let relaxed = finals
        .iter()
        .filter(|(x, e)| e.iter().all(|v| *v < 0.1) && x.iter().all(|v| v.abs() > 0.9))
        .count() as f64
        / finals.len() as f64;
    // Coherence time of a one-spin-flip superposition once the field is off.
    let p = CavityParams::default();
    let gc = g_c(&j, &DriveParams::default(), 1.0);
    let g2 = DriveParams::default().g_final_sq_over_gc_sq * gc * gc;
    let j_mean = (0..n).map(|i| j.entries[(i, i)]).sum::<f64>() / n as f64;
    let dephasing_ms = 1e3 / (0.5 * g2 * p.kappa * j_mean / (p.delta_c * p.delta_c));
    let minima = enumerate_local_minima(&j.entries).unwrap();
    let dist: Vec<u32> = finals.iter().map(|(x, _)| nearest_minimum(encoding_from_signs(x), n, &minima).unwrap().1).collect();
    let d0 = dist.iter().filter(|&&d| d == 0).count() as f64 / dist.len() as f64;
    let near = dist.iter().filter(|&&d| d <= 1).count() as f64 / dist.len() as f64;
    outcome(
        classical >= CLASSICAL_FRACTION_MIN && near >= NEAR_MINIMUM_FRACTION_MIN,
        format!(
            "N = {n}, {} trajectories: classical fraction {classical:.3} (entropy < 0.1 and |x| > 0.9: {relaxed:.3}; \
             one-flip dephasing time {dephasing_ms:.2} ms), {} minima, distance 0 / <= 1 fractions {d0:.3} / {near:.3}",
            s.steady_traj,
            minima.len()
        ),
    )
}

/// Parisi aggregate and pooled magnetizations over an ensemble.
fn ensemble_statistics(regime: Regime, drive: DriveParams, n: usize, n_j: usize, n_traj: usize, tag: u64) -> (Histogram, Vec<f64>, Vec<f64>) {
    let mut hists = Vec::new();
    let mut mags = Vec::new();
    let mut overlaps = Vec::new();
    for k in 0..n_j as u64 {
        let j = make_j(regime, n, derive_seed(MASTER, &[tag, k]));
        let finals: Vec<Vec<f64>> =
            steady_quantum(&j, drive, n_traj, derive_seed(MASTER, &[tag, k, 1])).into_iter().map(|(x, _)| x).collect();
        let m = OverlapMatrix::from_vectors(&finals, 4e-3).unwrap();
        let h = overlap_histogram(&m, n, true, 100, derive_seed(MASTER, &[tag, k, 2])).unwrap();
        overlaps.extend(h.values.iter().copied());
        hists.push(h);
        mags.extend(magnetization_distribution(&finals, 0, 0).unwrap().values);
    }
    (parisi_distribution(&hists).unwrap(), mags, overlaps)
}

fn criterion_5(s: &Scale) -> Outcome {
    let n = s.parisi_n;
    let (parisi, mags, _) = ensemble_statistics(Regime::SpinGlass, DriveParams::default(), n, s.parisi_j, s.parisi_traj, 5);
    let p = &parisi.probabilities;
    let peaks = p[0] > p[1] && p[n] > p[n - 1];
    let interior: Vec<f64> =
        parisi.centers.iter().zip(p).filter(|(c, _)| c.abs() <= 0.5 + 1e-12).map(|(_, v)| *v).collect();
    let interior_ok = interior.iter().all(|&v| v > 0.0);
    let (_, m_std) = moments(&mags);
    let m_ok = (MAGNETIZATION_STD_RANGE.0..=MAGNETIZATION_STD_RANGE.1).contains(&m_std);
    outcome(
        peaks && interior_ok && m_ok,
        format!(
            "N = {n}, {} J x {} trajectories: P(-1) {:.3} vs next bin {:.3}, P(+1) {:.3} vs next bin {:.3}, \
             min interior P {:.4}, magnetization std {m_std:.3}",
            s.parisi_j,
            s.parisi_traj,
            p[0],
            p[1],
            p[n],
            p[n - 1],
            interior.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    )
}

fn criterion_6(s: &Scale) -> Outcome {
    let n = s.phase_n;
    let (ferro, ferro_m, _) = ensemble_statistics(Regime::Ferromagnetic, DriveParams::default(), n, s.phase_j, s.phase_traj, 61);
    let mass: f64 = ferro.centers.iter().zip(&ferro.probabilities).filter(|(c, _)| c.abs() > 0.9).map(|(_, p)| p).sum();
    let polarized = ferro_m.iter().filter(|m| m.abs() > 0.9).count() as f64 / ferro_m.len() as f64;
    let both_signs = ferro_m.iter().any(|&m| m > 0.9) && ferro_m.iter().any(|&m| m < -0.9);
    let quench = DriveParams { quench: true, ..DriveParams::default() };
    let (_, q_m, q_q) = ensemble_statistics(Regime::SpinGlass, quench, n, s.phase_j, s.phase_traj, 62);
    let target = 1.0 / (n as f64).sqrt();
    let (_, q_std) = moments(&q_q);
    let (_, m_std) = moments(&q_m);
    let quench_ok = (q_std / target - 1.0).abs() <= QUENCH_STD_REL_TOL && (m_std / target - 1.0).abs() <= QUENCH_STD_REL_TOL;
    outcome(
        mass >= FERRO_MASS_MIN && polarized >= FERRO_MASS_MIN && both_signs && quench_ok,
        format!(
            "N = {n}: ferromagnet |q| > 0.9 mass {mass:.4}, |m| > 0.9 fraction {polarized:.4}, both signs {both_signs}; \
             quench overlap std {q_std:.3}, magnetization std {m_std:.3} vs 1/sqrt(N) = {target:.3}"
        ),
    )
}

fn criterion_7(_: &Scale) -> Outcome {
    let j = make_j(Regime::SpinGlass, 10, derive_seed(MASTER, &[7]));
    let tc = tc_bar(&[j.lambda_max()], Regime::SpinGlass).unwrap();
    let mut worst = 0.0f64;
    for k in 0..8 {
        let f = 0.05 * 20f64.powf(k as f64 / 7.0);
        let h = thermal_overlap(&j.entries, f * tc).unwrap();
        let fit = fit_temperature(&h, &j.entries, tc).unwrap();
        worst = worst.max((fit.t_over_tc / f - 1.0).abs());
    }
    outcome(worst < FIT_REL_TOL, format!("worst relative error {worst:.2e} over 8 temperatures in [0.05, 1] T_c (N = 10)"))
}

fn criterion_8(s: &Scale) -> Outcome {
    let mut means = Vec::new();
    let mut all_nonneg = true;
    for n in [8usize, 10, 12] {
        let mut ks = Vec::new();
        for k in 0..s.ultra_j as u64 {
            let j = make_j(Regime::SpinGlass, n, derive_seed(MASTER, &[8, n as u64, k]));
            let finals: Vec<Vec<f64>> = steady_quantum(&j, DriveParams::default(), s.ultra_traj, derive_seed(MASTER, &[8, n as u64, k, 1]))
                .into_iter()
                .map(|(x, _)| x)
                .collect();
            let u = ultrametric_stats(&OverlapMatrix::from_vectors(&finals, 4e-3).unwrap()).unwrap();
            all_nonneg &= u.k.iter().all(|&v| v >= 0.0);
            ks.push(u.mean);
        }
        means.push((n, ks.iter().sum::<f64>() / ks.len() as f64));
    }
    outcome(
        means[2].1 < means[0].1 && all_nonneg,
        format!(
            "{} J x {} trajectories: <K> = {}; all K >= 0: {all_nonneg}",
            s.ultra_j,
            s.ultra_traj,
            means.iter().map(|(n, k)| format!("{k:.4} (N = {n})")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn criterion_9(s: &Scale) -> Outcome {
    let n = s.barrier_n;
    let p = CavityParams::default();
    let drive = DriveParams::default();
    let mut report = Vec::new();
    for attempt in 0..3u64 {
        let j = make_j(Regime::SpinGlass, n, derive_seed(MASTER, &[9, attempt]));
        let gc = g_c(&j, &drive, 1.0);
        let tables = SpinTables::new(&j);
        let model = QuantumModel { tables: &tables, cavity: p, drive, g_c: gc };
        let sim = SimConfig { sample_interval: 20e-6, record_energy: true, ..SimConfig::for_cavity(&p) };
        let quantum: Vec<Vec<f64>> = (0..20u64)
            .into_par_iter()
            .map(|t| evolve_trajectory(&model, &sim, derive_seed(MASTER, &[9, attempt, 1, t])).unwrap().energy.unwrap())
            .collect();
        let cm = ClassicalModel { j: &j, cavity: p, drive, g_c: gc, m: 1.0 };
        let sde = SdeConfig { sample_interval: 20e-6, ..SdeConfig::default() };
        let classical: Vec<Vec<f64>> = (0..20u64)
            .into_par_iter()
            .map(|t| integrate_semiclassical(&cm, &sde, derive_seed(MASTER, &[9, attempt, 2, t])).unwrap().energy.unwrap())
            .collect();
        // Product-state floor on the same time grid, warm-started along the ramp.
        let times: Vec<f64> = (0..quantum[0].len()).map(|k| k as f64 * 20e-6).collect();
        let mut floor = Vec::with_capacity(times.len());
        let mut warm: Option<Vec<[f64; 3]>> = None;
        for (k, &t) in times.iter().enumerate() {
            let c = ModelCoefficients::at_time(t, &drive, &p, gc).unwrap();
            let f = semiclassical_energy_floor(&j.entries, &c, 1.0, 64, derive_seed(MASTER, &[9, attempt, 3, k as u64]), warm.as_deref())
                .unwrap();
            warm = Some(f.directions.clone());
            floor.push(f.energy);
        }
        let tol = |k: usize| BARRIER_MARGIN * floor[k].abs().max(f64::MIN_POSITIVE);
        let classical_below = classical
            .iter()
            .map(|e| (0..times.len()).map(|k| (floor[k] - e[k]) / floor[k].abs().max(f64::MIN_POSITIVE)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::NEG_INFINITY, f64::max);
        let classical_ok = classical.iter().all(|e| (0..times.len()).all(|k| e[k] >= floor[k] - tol(k)));
        let crossing: Vec<usize> = quantum
            .iter()
            .filter_map(|e| (0..times.len()).find(|&k| e[k] < floor[k] - tol(k)))
            .collect();
        let first = crossing.iter().min().map(|&k| times[k] * 1e6);
        report.push(format!(
            "J #{attempt}: {} of 20 quantum trajectories cross below the floor (earliest {:?} us); \
             semiclassical max relative excursion below floor {classical_below:.2e}",
            crossing.len(),
            first
        ));
        if !crossing.is_empty() {
            return outcome(classical_ok, format!("N = {n}, {}", report.join("; ")));
        }
    }
    outcome(false, format!("N = {n}, no barrier on any sampled J: {}", report.join("; ")))
}

fn criterion_10(_: &Scale) -> Outcome {
    let p = CavityParams::default();
    let drive = DriveParams::default();
    let beta = 0.1 * p.kappa.sqrt();
    let mut rates = Vec::new();
    for k in 0..20 {
        let j = make_j(Regime::SpinGlass, 15, derive_seed(MASTER, &[10, k]));
        let gc = g_c(&j, &drive, 1.0);
        let (g, _) = drive.schedule_values(drive.ramp_end, gc);
        rates.push(rate_estimates(g, &j.eigenvalues, p.delta_c, p.kappa, drive.omega_z0, gc, beta).detection_rate);
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let (lo, hi) = rates.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let in_range = rates.iter().all(|r| (DETECTION_RATE_RANGE_HZ.0..=DETECTION_RATE_RANGE_HZ.1).contains(r));
    outcome(
        in_range,
        format!("detection rate over 20 J (N = 15): mean {:.4} MHz, range [{:.4}, {:.4}] MHz", mean / 1e6, lo / 1e6, hi / 1e6),
    )
}

fn criterion_11(_: &Scale) -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    // Norm preservation of the stepper.
    let p = CavityParams::default();
    let drive = DriveParams::default();
    let j = make_j(Regime::SpinGlass, 6, derive_seed(MASTER, &[11]));
    let gc = g_c(&j, &drive, 1.0);
    let tables = SpinTables::new(&j);
    let mut state = initial_state(6, 15).unwrap();
    let mut stepper = Stepper::new();
    let mut norm_ok = true;
    for k in 0..2000 {
        let c = ModelCoefficients::at_time(k as f64 * 2e-7, &drive, &p, gc).unwrap();
        stepper.step(&mut state, &tables, &EffectiveTerms::new(&tables, &c), 2e-7).unwrap();
        norm_ok &= (state.norm_sqr() - 1.0).abs() < 1e-12;
    }
    check("norm", norm_ok);
    // Entropy identities.
    let h = 0.5f64.sqrt();
    let bell = PureState::from_amplitudes(vec![
        Complex64::new(h, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(h, 0.0),
    ])
    .unwrap();
    check("entropy bell", (entanglement_entropy(&bell, 0) - 2f64.ln()).abs() < 1e-12);
    let product = initial_state(4, 15).unwrap();
    check("entropy product", (0..4).all(|i| entanglement_entropy(&product, i).abs() < 1e-12));
    // Z2 symmetry of overlap histograms.
    let mut rng = rng_from_seed(derive_seed(MASTER, &[11, 1]));
    let base: Vec<Vec<f64>> = (0..100).map(|_| (0..10).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()).collect();
    let closed: Vec<Vec<f64>> = base.iter().flat_map(|r| [r.clone(), r.iter().map(|v| -v).collect()]).collect();
    let hist = overlap_histogram(&OverlapMatrix::from_vectors(&closed, 0.0).unwrap(), 10, true, 100, 3).unwrap();
    let partner = 1.0 / (closed.len() - 1) as f64;
    check(
        "histogram Z2",
        (0..=10).all(|k| {
            let extra = if k == 0 || k == 10 { partner } else { 0.0 };
            (hist.probabilities[k] - hist.probabilities[10 - k]).abs() <= 3.0 * (hist.errors[k] + hist.errors[10 - k]) + extra + 1e-12
        }),
    );
    // Binder limits.
    check("binder 2/3", (binder_ratio(&[1.0, -1.0, 1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let gauss: Vec<f64> = (0..400_000).map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng)).collect();
    check("binder 0", binder_ratio(&gauss).unwrap().abs() < 0.02);
    check("binder undefined", binder_ratio(&[0.0; 5]).is_none());
    // Bootstrap on zero-variance data.
    check("bootstrap", bootstrap_histogram(vec![0.5; 40], 4, 100, 1).errors.iter().all(|&e| e == 0.0));
    // Spin-length conservation.
    let cm = ClassicalModel { j: &j, cavity: p, drive, g_c: g_c(&j, &drive, 1.0), m: 1.0 };
    let rec = integrate_semiclassical(&cm, &SdeConfig { t_final: 500e-6, dt: 2e-9, ..SdeConfig::default() }, 1).unwrap();
    check(
        "spin length",
        (0..rec.times.len()).all(|k| (0..6).all(|i| (rec.x[k][i].powi(2) + rec.y[k][i].powi(2) + rec.z[k][i].powi(2) - 1.0).abs() < 1e-12)),
    );
    let pass = failures.is_empty();
    outcome(pass, if pass { "all invariant checks hold".into() } else { format!("failed: {}", failures.join(", ")) })
}

type Criterion = fn(&Scale) -> Outcome;

fn main() {
    let scale = Scale::from_env();
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, Criterion); 11] = [
        (1, "threshold consistency", criterion_1),
        (2, "unraveling correctness", criterion_2),
        (3, "Green's-function oracle", criterion_3),
        (4, "classical steady states", criterion_4),
        (5, "RSB signatures", criterion_5),
        (6, "phase discrimination", criterion_6),
        (7, "thermal-fit round trip", criterion_7),
        (8, "ultrametricity trend", criterion_8),
        (9, "semiclassical barrier", criterion_9),
        (10, "detection-rate sanity", criterion_10),
        (11, "invariant suites", criterion_11),
    ];
    println!("acceptance scale: {}", if scale.full { "full" } else { "ci (set CQED_ACCEPTANCE=full for full scale)" });
    let mut failed = 0;
    for (k, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| f(&scale)))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        println!(
            "criterion {k:>2} {}: {name}: {} [{:.1} s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        // Failing criteria are reported, not fatal, so the rest of the suite
        // still runs under a plain `cargo test`; gate on them explicitly.
        if std::env::var("CQED_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    } else {
        println!("all acceptance criteria passed");
    }
}
