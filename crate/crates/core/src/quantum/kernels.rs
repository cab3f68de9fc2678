//! Bit-level spin operator kernels on `sigma^x`-basis state vectors.
//!
//! In this basis `S^x_i` is diagonal (`x_i / 2`, `x_i = ±1`), `S^z_i` flips
//! bit `i` without a phase and `S^y_i` flips bit `i` with
//! `sigma^y |±> = ∓i |∓>`.

use num_complex::Complex64;

use super::state::{sign_of_bit, PureState};
use crate::cavity::CouplingMatrix;
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Phase picked up by `sigma^y_i` when it lands on basis state `b`.
#[inline]
pub fn sigma_y_phase(b: usize, i: usize) -> Complex64 {
    if (b >> i) & 1 == 0 {
        I
    } else {
        -I
    }
}

/// `sum_i (wx_i S^x_i + wy_i S^y_i) |psi>`, unnormalized.
pub fn apply_spin_sum(state: &PureState, wx: &[Complex64], wy: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = state.n;
    if wx.len() != n || wy.len() != n {
        return Err(Error::validation(format!(
            "weight lengths ({}, {}) do not match {n} spins",
            wx.len(),
            wy.len()
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
    apply_spin_sum_into(&state.amps, n, wx, wy, &mut out);
    Ok(out)
}

pub(crate) fn apply_spin_sum_into(psi: &[Complex64], n: usize, wx: &[Complex64], wy: &[Complex64], out: &mut [Complex64]) {
    let y_active: Vec<usize> = (0..n).filter(|&i| wy[i] != Complex64::new(0.0, 0.0)).collect();
    for (b, o) in out.iter_mut().enumerate() {
        let mut diag = Complex64::new(0.0, 0.0);
        for (i, w) in wx.iter().enumerate() {
            diag += w * (0.5 * sign_of_bit(b, i));
        }
        let mut acc = diag * psi[b];
        for &i in &y_active {
            acc += wy[i] * 0.5 * sigma_y_phase(b, i) * psi[b ^ (1 << i)];
        }
        *o = acc;
    }
}

/// Per-`J` lookup tables shared read-only by all trajectories.
#[derive(Debug, Clone)]
pub struct SpinTables {
    pub n: usize,
    /// `J_ij` row-major.
    pub j: Vec<f64>,
    /// `d(b) = sum_ij J_ij x_i x_j / 4`, diagonal included.
    pub ising: Vec<f64>,
    /// `w[j][b] = sum_{i != j} J_ij x_i / 2`.
    pub field: Vec<Vec<f64>>,
    /// `c[k][b] = sum_i v^k_i x_i / 2`.
    pub channel: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Row `k` is `v^k`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub trace: f64,
}

/// Fill `out[b] = sum_i coef_i x_i(b) / 2` by peeling the lowest set bit.
fn linear_table(coef: &[f64], out: &mut [f64]) {
    out[0] = coef.iter().sum::<f64>() / 2.0;
    for b in 1..out.len() {
        let low = b.trailing_zeros() as usize;
        out[b] = out[b & (b - 1)] - coef[low];
    }
}

impl SpinTables {
    pub fn new(jm: &CouplingMatrix) -> Self {
        let n = jm.n();
        let dim = 1usize << n;
        let j: Vec<f64> = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| jm.get(r, c)).collect();
        let field: Vec<Vec<f64>> = (0..n)
            .map(|jj| {
                let coef: Vec<f64> = (0..n).map(|i| if i == jj { 0.0 } else { j[i * n + jj] }).collect();
                let mut t = vec![0.0; dim];
                linear_table(&coef, &mut t);
                t
            })
            .collect();
        let trace: f64 = (0..n).map(|i| j[i * n + i]).sum();
        // d(b) = sum_i x_i w_i(b) / 2 + trace / 4.
        let ising = (0..dim)
            .map(|b| (0..n).map(|i| sign_of_bit(b, i) * field[i][b]).sum::<f64>() / 2.0 + trace / 4.0)
            .collect();
        let eigenvectors: Vec<Vec<f64>> = (0..n).map(|k| jm.eigenvector(k)).collect();
        let channel = eigenvectors
            .iter()
            .map(|v| {
                let mut t = vec![0.0; dim];
                linear_table(v, &mut t);
                t
            })
            .collect();
        SpinTables { n, j, ising, field, channel, eigenvalues: jm.eigenvalues.clone(), eigenvectors, trace }
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn jij(&self, i: usize, j: usize) -> f64 {
        self.j[i * self.n + j]
    }
}

/// Visit every amplitude pair `(b, b | 1 << i)` with bit `i` of `b` clear.
#[inline]
pub(crate) fn for_each_pair<T, F: FnMut(&mut T, &mut T)>(v: &mut [T], i: usize, mut f: F) {
    let half = 1usize << i;
    for block in v.chunks_exact_mut(2 * half) {
        let (lo, hi) = block.split_at_mut(half);
        lo.iter_mut().zip(hi.iter_mut()).for_each(|(p, q)| f(p, q));
    }
}

/// `out += coef * sum_j w_j(b) S^y_j psi`.
pub(crate) fn add_xy_term(psi: &[Complex64], tables: &SpinTables, coef: Complex64, out: &mut [Complex64]) {
    // S^y_j maps the bit-0 amplitude to +i/2 on bit 1's partner and vice versa.
    let up = coef * I * 0.5;
    for jj in 0..tables.n {
        let half = 1usize << jj;
        let w = &tables.field[jj];
        for base in (0..psi.len()).step_by(2 * half) {
            for b in base..base + half {
                let c = b | half;
                out[b] += up * psi[c] * w[b];
                out[c] -= up * psi[b] * w[c];
            }
        }
    }
}

/// `out += coef * sum_{i != j} J_ij S^y_i S^y_j psi`.
pub(crate) fn add_yy_term(psi: &[Complex64], tables: &SpinTables, coef: Complex64, out: &mut [Complex64]) {
    let n = tables.n;
    for (b, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for jj in 0..n {
                if i == jj {
                    continue;
                }
                // S^y_i S^y_j: flip j then i; phases evaluated where each operator lands.
                let mid = b ^ (1 << i);
                acc += tables.jij(i, jj) * sigma_y_phase(b, i) * sigma_y_phase(mid, jj) * psi[mid ^ (1 << jj)];
            }
        }
        *o += coef * 0.25 * acc;
    }
}

/// `out += sum_i coef_i S^z_i psi`.
pub(crate) fn add_z_term(psi: &[Complex64], coef: &[Complex64], out: &mut [Complex64]) {
    for (b, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in coef.iter().enumerate() {
            acc += c * psi[b ^ (1 << i)];
        }
        *o += 0.5 * acc;
    }
}
