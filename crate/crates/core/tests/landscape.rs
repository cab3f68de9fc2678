use ccqed_core::cavity::{build_coupling_matrix, sample_positions, CavityParams, CouplingMatrix, Regime};
use ccqed_core::landscape::{
    all_energies, canonical, encoding_from_spins, enumerate_local_minima, ising_energy, nearest_minimum,
    semiclassical_energy_floor, spins_from_encoding, tally_occurrences, Encoding, ProductEnergy,
};
use ccqed_core::model::{critical_coupling, DriveParams, ModelCoefficients};
use ccqed_core::quantum::{ground_state, SpinTables};
use ccqed_core::seeds::rng_from_seed;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use std::collections::BTreeSet;
use std::f64::consts::PI;

fn random_j(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let mut m = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v: f64 = rng.random_range(-1.0..1.0);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

fn glass(seed: u64, n: usize) -> CouplingMatrix {
    build_coupling_matrix(&sample_positions(Regime::SpinGlass, n, 1, seed).unwrap(), &CavityParams::default()).unwrap()
}

#[test]
fn energy_matches_dense_quadratic_form() {
    let j = random_j(10, 1);
    let mut rng = rng_from_seed(2);
    for _ in 0..50 {
        let s: Vec<i8> = (0..10).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        let v = DVector::from_iterator(10, s.iter().map(|&x| x as f64));
        let want = -(v.transpose() * &j * &v)[(0, 0)];
        assert!((ising_energy(&s, &j).unwrap() - want).abs() < 1e-12);
    }
    let pair = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    assert_eq!(ising_energy(&[1, 1], &pair).unwrap(), -2.0);
}

#[test]
fn exhaustive_energies_agree_with_direct_evaluation() {
    let j = random_j(9, 3);
    let all = all_energies(&j).unwrap();
    for (enc, e) in all.iter().enumerate() {
        let direct = ising_energy(&spins_from_encoding(enc as Encoding, 9), &j).unwrap();
        assert!((e - direct).abs() < 1e-10, "{enc}: {e} vs {direct}");
    }
}

#[test]
fn ferromagnet_has_one_aligned_pair() {
    let mut j = random_j(8, 4).abs();
    j.fill_diagonal(0.0);
    let mins = enumerate_local_minima(&j).unwrap();
    assert_eq!(mins.len(), 1);
    assert_eq!(mins[0].encoding, 0);
    assert_eq!(mins[0].z2_partner, 0xff);
}

#[test]
fn enumeration_rejects_oversized_problems() {
    assert!(enumerate_local_minima(&DMatrix::zeros(25, 25)).is_err());
}

/// Steepest single-flip descent to a fixed point.
fn greedy_descent(j: &DMatrix<f64>, mut s: Vec<i8>) -> Vec<i8> {
    let n = s.len();
    loop {
        let mut best = (0.0, None);
        for i in 0..n {
            let field: f64 = (0..n).filter(|&k| k != i).map(|k| j[(i, k)] * s[k] as f64).sum();
            let delta = 4.0 * s[i] as f64 * field;
            if delta < best.0 {
                best = (delta, Some(i));
            }
        }
        match best.1 {
            Some(i) => s[i] = -s[i],
            None => return s,
        }
    }
}

#[test]
fn enumeration_agrees_with_random_restart_descent() {
    let n = 12;
    let j = glass(31, n).entries;
    let mins = enumerate_local_minima(&j).unwrap();
    assert!(mins.len() >= 2, "want a glassy instance, got {} minima", mins.len());
    let exhaustive: BTreeSet<Encoding> = mins.iter().map(|m| m.encoding).collect();
    let mut rng = rng_from_seed(5);
    let mut found = BTreeSet::new();
    for _ in 0..10_000 {
        let s: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        found.insert(canonical(encoding_from_spins(&greedy_descent(&j, s)), n));
    }
    assert!(found.is_subset(&exhaustive));
    for m in &mins {
        let s = spins_from_encoding(m.encoding, n);
        assert_eq!(greedy_descent(&j, s.clone()), s);
        let e = ising_energy(&s, &j).unwrap();
        assert!((e - m.energy).abs() < 1e-10);
        for i in 0..n {
            let mut t = s.clone();
            t[i] = -t[i];
            assert!(ising_energy(&t, &j).unwrap() > e);
        }
    }
    assert_eq!(found, exhaustive);
    assert!(mins.windows(2).all(|w| w[0].energy <= w[1].energy));
}

#[test]
fn nearest_minimum_and_tallies() {
    let j = glass(31, 12).entries;
    let mut mins = enumerate_local_minima(&j).unwrap();
    let m0 = mins[0].encoding;
    assert_eq!(nearest_minimum(m0, 12, &mins).unwrap(), (0, 0));
    assert_eq!(nearest_minimum(mins[0].z2_partner, 12, &mins).unwrap(), (0, 0));
    assert_eq!(nearest_minimum(m0 ^ 0b100, 12, &mins).unwrap().1, 1);
    let mut rng = rng_from_seed(8);
    let states: Vec<Encoding> = (0..500).map(|_| rng.random_range(0..1 << 12)).collect();
    let assigned = tally_occurrences(&states, 12, &mut mins, 1).unwrap();
    assert_eq!(mins.iter().map(|m| m.occurrence_count).sum::<u64>(), assigned);
    assert!(nearest_minimum(0, 12, &[]).is_err());
}

fn drive_coefficients(j: &CouplingMatrix) -> ModelCoefficients {
    let p = CavityParams::default();
    let d = DriveParams::default();
    let gc = critical_coupling(j.lambda_max(), d.omega_z0, p.delta_c, p.kappa, 1.0).unwrap();
    ModelCoefficients::at_time(d.ramp_end, &d, &p, gc).unwrap()
}

#[test]
fn floor_without_field_is_the_best_ising_state() {
    let j = glass(3, 8);
    let co = ModelCoefficients { omega_z: 0.0, alpha_minus: Complex64::new(0.0, 0.0), ..drive_coefficients(&j) };
    let floor = semiclassical_energy_floor(&j.entries, &co, 1.0, 200, 1, None).unwrap();
    // Along x the product energy is k/4 sum_ik J_ik s_i s_k with k = 2 s Re(alpha_+).
    let k = 2.0 * co.interaction_scale() * co.alpha_plus.re;
    let best = all_energies(&j.entries).unwrap().into_iter().map(|e| -k / 4.0 * e).fold(f64::INFINITY, f64::min);
    assert!((floor.energy - best).abs() < 1e-9 * best.abs(), "{} vs {best}", floor.energy);
}

#[test]
fn floor_lies_above_the_quantum_ground_energy() {
    for seed in 0..3 {
        let j = glass(seed, 6);
        let co = drive_coefficients(&j);
        let floor = semiclassical_energy_floor(&j.entries, &co, 1.0, 100, seed, None).unwrap();
        let e0 = ground_state(&SpinTables::new(&j), &co, 3, 1e-12).unwrap().energy;
        assert!(floor.energy >= e0 - 1e-9 * e0.abs(), "{} < {e0}", floor.energy);
    }
}

#[test]
fn floor_matches_a_two_degree_grid_scan() {
    let n = 4;
    let j = glass(17, n);
    let co = drive_coefficients(&j);
    // Real alpha_- removes the x-y cross term, so every optimum lies in the x-z plane.
    let co = ModelCoefficients { alpha_minus: Complex64::new(co.alpha_minus.re, 0.0), ..co };
    let pe = ProductEnergy::new(&j.entries, &co, 1.0);
    let floor = semiclassical_energy_floor(&j.entries, &co, 1.0, 500, 2, None).unwrap();
    let angles: Vec<[f64; 3]> = (0..180).map(|k| {
        let psi = (2 * k) as f64 * PI / 180.0;
        [psi.sin(), 0.0, psi.cos()]
    }).collect();
    // Spin 0 on half the circle suffices: (x, z) -> (-x, z) on all spins is a symmetry,
    // and psi -> -psi maps the other half onto this one.
    let mut grid = f64::INFINITY;
    let mut dirs = vec![[0.0; 3]; n];
    for a in 0..90 {
        dirs[0] = angles[a];
        for b in &angles {
            dirs[1] = *b;
            for c in &angles {
                dirs[2] = *c;
                for d in &angles {
                    dirs[3] = *d;
                    grid = grid.min(pe.energy(&dirs));
                }
            }
        }
    }
    let scale = pe.scale();
    assert!(floor.energy <= grid + 1e-9 * scale, "{} vs grid {grid}", floor.energy);
    let grid_error = n as f64 * scale * (PI / 180.0).powi(2);
    assert!(grid - floor.energy < grid_error, "{} vs grid {grid} (bound {grid_error:e})", floor.energy);
}

#[test]
fn floor_needs_a_sample() {
    let j = glass(1, 3);
    assert!(semiclassical_energy_floor(&j.entries, &drive_coefficients(&j), 1.0, 0, 1, None).is_err());
}

proptest! {
    #[test]
    fn energy_is_z2_symmetric(seed in 0u64..1000, enc in 0u32..1 << 10) {
        let j = random_j(10, seed);
        let s = spins_from_encoding(enc, 10);
        let flipped: Vec<i8> = s.iter().map(|x| -x).collect();
        prop_assert!((ising_energy(&s, &j).unwrap() - ising_energy(&flipped, &j).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn minima_come_in_exact_pairs(seed in 0u64..200) {
        let n = 8;
        let j = random_j(n, seed);
        let all = all_energies(&j).unwrap();
        for m in enumerate_local_minima(&j).unwrap() {
            prop_assert_eq!(m.z2_partner, m.encoding ^ 0xff);
            prop_assert_eq!(canonical(m.z2_partner, n), m.encoding);
            prop_assert_eq!(canonical(m.encoding, n), m.encoding);
            prop_assert!((all[m.encoding as usize] - all[m.z2_partner as usize]).abs() < 1e-10);
            for i in 0..n {
                prop_assert!(all[(m.encoding ^ (1 << i)) as usize] > m.energy);
            }
        }
    }
}
