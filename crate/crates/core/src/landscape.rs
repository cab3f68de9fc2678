//! Classical Ising landscape of a coupling matrix and the product-state
//! energy floor.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;
use crate::error::{Error, Result};
use crate::model::ModelCoefficients;
use crate::seeds::{derive_seed, rng_from_seed};

pub const MAX_ENUMERATION_SPINS: usize = 24;

/// Spin configuration; bit `i` set means `s_i = -1`.
pub type Encoding = u32;

pub fn spins_from_encoding(enc: Encoding, n: usize) -> Vec<i8> {
    (0..n).map(|i| if (enc >> i) & 1 == 0 { 1 } else { -1 }).collect()
}

pub fn encoding_from_spins(s: &[i8]) -> Encoding {
    s.iter().enumerate().fold(0, |acc, (i, &v)| if v < 0 { acc | (1 << i) } else { acc })
}

/// Encoding of the sign pattern of real values; zero counts as `+1`.
pub fn encoding_from_signs(x: &[f64]) -> Encoding {
    x.iter().enumerate().fold(0, |acc, (i, &v)| if v < 0.0 { acc | (1 << i) } else { acc })
}

fn complement(enc: Encoding, n: usize) -> Encoding {
    enc ^ (((1u64 << n) - 1) as Encoding)
}

/// Canonical member of a Z2 pair: the one with spin `n-1` up.
pub fn canonical(enc: Encoding, n: usize) -> Encoding {
    enc.min(complement(enc, n))
}

/// `E = -sum_ij J_ij s_i s_j`, diagonal included.
pub fn ising_energy(s: &[i8], j: &DMatrix<f64>) -> Result<f64> {
    let n = j.nrows();
    if s.len() != n {
        return Err(Error::validation(format!("configuration length {} != {n}", s.len())));
    }
    let mut e = 0.0;
    for a in 0..n {
        let mut row = 0.0;
        for b in 0..n {
            row += j[(a, b)] * s[b] as f64;
        }
        e -= s[a] as f64 * row;
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    /// Canonical representative.
    pub encoding: Encoding,
    pub z2_partner: Encoding,
    pub energy: f64,
    pub occurrence_count: u64,
}

/// All strict single-flip local minima, one per Z2 pair, sorted by energy.
pub fn enumerate_local_minima(j: &DMatrix<f64>) -> Result<Vec<LocalMinimum>> {
    let n = j.nrows();
    if n > MAX_ENUMERATION_SPINS {
        return Err(Error::validation(format!(
            "exhaustive enumeration limited to {MAX_ENUMERATION_SPINS} spins, got {n}"
        )));
    }
    let jm: Vec<f64> = (0..n * n).map(|k| j[(k / n, k % n)]).collect();
    let half = 1usize << (n - 1);
    // Canonical states have spin n-1 up; split that half-space into chunks.
    let chunk_bits = (n - 1).min(12);
    let chunks = half >> chunk_bits;
    let mut found: Vec<LocalMinimum> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let start = c << chunk_bits;
            let end = start + (1 << chunk_bits);
            scan_range(&jm, n, start, end)
        })
        .collect();
    found.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.encoding.cmp(&b.encoding)));
    Ok(found)
}

/// Gray-code scan of encodings `start..end` (a power-of-two aligned block).
fn scan_range(jm: &[f64], n: usize, start: usize, end: usize) -> Vec<LocalMinimum> {
    let mut out = Vec::new();
    let mut s: Vec<f64> = (0..n).map(|i| if (start >> i) & 1 == 0 { 1.0 } else { -1.0 }).collect();
    // field_i = sum_{j != i} J_ij s_j
    let mut field: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&k| k != i).map(|k| jm[i * n + k] * s[k]).sum())
        .collect();
    let diag: f64 = (0..n).map(|i| jm[i * n + i]).sum();
    let mut energy: f64 = -(0..n).map(|i| s[i] * field[i]).sum::<f64>() - diag;
    let count = end - start;
    let mut enc = start;
    for step in 0..count {
        // Flipping s_i changes E by 4 s_i field_i.
        if (0..n).all(|i| 4.0 * s[i] * field[i] > 0.0) {
            let e = enc as Encoding;
            out.push(LocalMinimum {
                encoding: e,
                z2_partner: complement(e, n),
                energy,
                occurrence_count: 0,
            });
        }
        if step + 1 == count {
            break;
        }
        let flip = (step + 1).trailing_zeros() as usize;
        energy += 4.0 * s[flip] * field[flip];
        s[flip] = -s[flip];
        let delta = 2.0 * s[flip];
        for i in 0..n {
            if i != flip {
                field[i] += jm[i * n + flip] * delta;
            }
        }
        enc ^= 1 << flip;
    }
    out
}

/// Ising energy of every encoding, indexed by encoding.
pub fn all_energies(j: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = j.nrows();
    if n == 0 || n > MAX_ENUMERATION_SPINS {
        return Err(Error::validation(format!(
            "exhaustive energies need 1..={MAX_ENUMERATION_SPINS} spins, got {n}"
        )));
    }
    let mut out = vec![0.0; 1 << n];
    let mut field: Vec<f64> = (0..n).map(|i| (0..n).filter(|&k| k != i).map(|k| j[(i, k)]).sum()).collect();
    let mut s = vec![1.0; n];
    let mut energy = -(0..n).map(|i| field[i] + j[(i, i)]).sum::<f64>();
    let mut enc = 0usize;
    out[0] = energy;
    for step in 1..out.len() {
        let flip = step.trailing_zeros() as usize;
        energy += 4.0 * s[flip] * field[flip];
        s[flip] = -s[flip];
        for i in 0..n {
            if i != flip {
                field[i] += 2.0 * s[flip] * j[(i, flip)];
            }
        }
        enc ^= 1 << flip;
        out[enc] = energy;
    }
    Ok(out)
}

/// Nearest minimum (either Z2 member) by Hamming distance.
///
/// Ties go to the lower energy, then the lower canonical encoding. Returns
/// the index into `minima` and the distance.
pub fn nearest_minimum(s: Encoding, n: usize, minima: &[LocalMinimum]) -> Result<(usize, u32)> {
    if minima.is_empty() {
        return Err(Error::validation("no minima to compare against"));
    }
    let mut best: Option<(usize, u32)> = None;
    for (idx, m) in minima.iter().enumerate() {
        let d = (s ^ m.encoding).count_ones().min((s ^ complement(m.encoding, n)).count_ones());
        let better = match best {
            None => true,
            Some((bi, bd)) => {
                let bm = &minima[bi];
                d < bd
                    || (d == bd
                        && (m.energy < bm.energy || (m.energy == bm.energy && m.encoding < bm.encoding)))
            }
        };
        if better {
            best = Some((idx, d));
        }
    }
    Ok(best.expect("nonempty"))
}

/// Increment occurrence counts for states within `cutoff` flips of a minimum.
///
/// Returns how many states were assigned.
pub fn tally_occurrences(states: &[Encoding], n: usize, minima: &mut [LocalMinimum], cutoff: u32) -> Result<u64> {
    let mut assigned = 0;
    for &s in states {
        let (idx, d) = nearest_minimum(s, n, minima)?;
        if d <= cutoff {
            minima[idx].occurrence_count += 1;
            assigned += 1;
        }
    }
    Ok(assigned)
}

/// Coefficients of the product-state energy for ensembles of size `M`.
#[derive(Debug, Clone)]
pub struct ProductEnergy {
    n: usize,
    j: Vec<f64>,
    m: f64,
    omega_z: f64,
    k_xx: f64,
    k_xy: f64,
    k_z: f64,
}

impl ProductEnergy {
    pub fn new(j: &DMatrix<f64>, coeffs: &ModelCoefficients, m: f64) -> Self {
        let n = j.nrows();
        let s = coeffs.interaction_scale();
        ProductEnergy {
            n,
            j: (0..n * n).map(|k| j[(k / n, k % n)]).collect(),
            m,
            omega_z: coeffs.omega_z,
            k_xx: 2.0 * s * coeffs.alpha_plus.re,
            k_xy: -2.0 * s * coeffs.alpha_minus.im,
            k_z: -2.0 * s * coeffs.alpha_minus.re * m / 4.0,
        }
    }

    /// `<H>` in the coherent product state with Bloch unit vectors `dirs`.
    pub fn energy(&self, dirs: &[[f64; 3]]) -> f64 {
        let (n, m) = (self.n, self.m);
        let pair = m * m / 4.0;
        let same = m * (m - 1.0) / 4.0;
        let mut e = 0.0;
        for i in 0..n {
            let d = dirs[i];
            let jii = self.j[i * n + i];
            e += m / 2.0 * self.omega_z * d[2] + self.k_z * jii * d[2];
            e += self.k_xx * jii * (same * d[0] * d[0] + m / 4.0);
            e += self.k_xy * jii * same * d[0] * d[1];
            for k in 0..n {
                if k != i {
                    let jik = self.j[i * n + k];
                    e += pair * jik * (self.k_xx * d[0] * dirs[k][0] + self.k_xy * d[0] * dirs[k][1]);
                }
            }
        }
        e
    }

    /// Euclidean gradient of [`Self::energy`] with respect to each direction.
    pub fn gradient(&self, dirs: &[[f64; 3]], out: &mut [[f64; 3]]) {
        let (n, m) = (self.n, self.m);
        let pair = m * m / 4.0;
        let same = m * (m - 1.0) / 4.0;
        for i in 0..n {
            let jii = self.j[i * n + i];
            let (mut fx, mut fy) = (0.0, 0.0);
            for k in 0..n {
                if k != i {
                    let jik = self.j[i * n + k];
                    fx += jik * dirs[k][0];
                    fy += jik * dirs[k][1];
                }
            }
            let d = dirs[i];
            out[i] = [
                self.k_xx * (2.0 * pair * fx + 2.0 * jii * same * d[0]) + self.k_xy * (pair * fy + jii * same * d[1]),
                self.k_xy * (pair * fx + jii * same * d[0]),
                m / 2.0 * self.omega_z + self.k_z * jii,
            ];
        }
    }

    /// Energy scale used to make the descent tolerance relative.
    pub fn scale(&self) -> f64 {
        let jsum: f64 = self.j.iter().map(|v| v.abs()).sum();
        let m = self.m;
        (m / 2.0 * self.omega_z.abs() * self.n as f64
            + (self.k_xx.abs() + self.k_xy.abs()) * m * m / 4.0 * jsum
            + self.k_z.abs() * jsum)
            .max(f64::MIN_POSITIVE)
    }
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

fn tangent(dirs: &[[f64; 3]], grad: &[[f64; 3]]) -> Vec<[f64; 3]> {
    dirs.iter()
        .zip(grad)
        .map(|(d, g)| {
            let dot = d[0] * g[0] + d[1] * g[1] + d[2] * g[2];
            [g[0] - dot * d[0], g[1] - dot * d[1], g[2] - dot * d[2]]
        })
        .collect()
}

/// Projected gradient descent with Armijo backtracking on the product of spheres.
///
/// Stops when the tangent gradient norm drops below `tol * scale`.
pub fn descend(pe: &ProductEnergy, dirs: &mut [[f64; 3]], tol: f64, max_iter: usize) -> f64 {
    let n = dirs.len();
    let scale = pe.scale();
    let mut grad = vec![[0.0; 3]; n];
    let mut e = pe.energy(dirs);
    let mut step = 1.0 / scale;
    let mut trial = vec![[0.0; 3]; n];
    for _ in 0..max_iter {
        pe.gradient(dirs, &mut grad);
        let t = tangent(dirs, &grad);
        let gn2: f64 = t.iter().map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sum();
        if gn2.sqrt() < tol * scale {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = normalize3([
                    dirs[i][0] - step * t[i][0],
                    dirs[i][1] - step * t[i][1],
                    dirs[i][2] - step * t[i][2],
                ]);
            }
            let et = pe.energy(&trial);
            if et <= e - 1e-4 * step * gn2 {
                dirs.copy_from_slice(&trial);
                e = et;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    e
}

/// Random unit vectors for every spin.
pub fn random_directions(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            normalize3([
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ])
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Floor {
    pub energy: f64,
    pub directions: Vec<[f64; 3]>,
}

/// Lowest product-state energy found from `n_samples` random restarts.
///
/// `warm_start`, when given, is descended as an extra restart. The result
/// is an upper estimate of the true floor.
pub fn semiclassical_energy_floor(
    j: &DMatrix<f64>,
    coeffs: &ModelCoefficients,
    m: f64,
    n_samples: usize,
    seed: u64,
    warm_start: Option<&[[f64; 3]]>,
) -> Result<Floor> {
    if n_samples == 0 {
        return Err(Error::validation("floor needs at least one sample"));
    }
    let pe = ProductEnergy::new(j, coeffs, m);
    let n = j.nrows();
    let mut candidates: Vec<Floor> = (0..n_samples)
        .into_par_iter()
        .map(|r| {
            let mut dirs = random_directions(n, derive_seed(seed, &[r as u64]));
            let energy = descend(&pe, &mut dirs, 1e-8, 20_000);
            Floor { energy, directions: dirs }
        })
        .collect();
    if let Some(w) = warm_start {
        let mut dirs = w.to_vec();
        let energy = descend(&pe, &mut dirs, 1e-8, 20_000);
        candidates.push(Floor { energy, directions: dirs });
    }
    Ok(candidates.into_iter().min_by(|a, b| a.energy.total_cmp(&b.energy)).expect("nonempty"))
}
