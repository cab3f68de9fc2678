//! Confocal cavity geometry and the cavity-mediated coupling matrix.
//!
//! All positions are dimensionless, measured in units of the fundamental
//! waist `w0`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::seeds::rng_from_seed;

pub type Point = [f64; 2];

/// Relative tolerance on eigenvalues that may be clamped to zero.
pub const EPS_CLAMP: f64 = 1e-8;
/// Relative imaginary residue of `D` above which evaluation is rejected.
pub const IMAG_REJECT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Fundamental waist, micrometres.
    pub w0_um: f64,
    pub alpha: f64,
    /// Cavity field loss rate, rad/s.
    pub kappa: f64,
    /// Pump-cavity detuning, rad/s, negative.
    pub delta_c: f64,
    pub n_modes_oracle: usize,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams {
            w0_um: 35.0,
            alpha: 0.02,
            kappa: 2.0 * PI * 260e3,
            delta_c: -2.0 * PI * 80e6,
            n_modes_oracle: 80,
        }
    }
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.w0_um > 0.0
            && self.alpha > 0.0
            && self.kappa > 0.0
            && self.delta_c < 0.0
            && self.n_modes_oracle >= 1
            && [self.w0_um, self.alpha, self.kappa, self.delta_c].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid cavity parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SpinGlass,
    Ferromagnetic,
}

impl Regime {
    /// Per-axis position spread in units of `w0`.
    pub fn position_std(self) -> f64 {
        match self {
            Regime::SpinGlass => 2.0,
            Regime::Ferromagnetic => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinLayout {
    pub positions: Vec<Point>,
    pub ensemble_size: u64,
}

impl SpinLayout {
    pub fn new(positions: Vec<Point>, ensemble_size: u64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::validation("layout must contain at least one spin"));
        }
        if ensemble_size == 0 {
            return Err(Error::validation("ensemble size M must be at least 1"));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::validation("layout coordinates must be finite"));
        }
        Ok(SpinLayout { positions, ensemble_size })
    }

    pub fn n_spins(&self) -> usize {
        self.positions.len()
    }
}

/// Independent isotropic Gaussian positions centred on the cavity axis.
pub fn sample_positions(regime: Regime, n: usize, ensemble_size: u64, seed: u64) -> Result<SpinLayout> {
    if n == 0 {
        return Err(Error::validation("n must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, regime.position_std()).expect("positive std");
    let positions = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    SpinLayout::new(positions, ensemble_size)
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn sum2(a: Point, b: Point) -> f64 {
    (a[0] + b[0]).powi(2) + (a[1] + b[1]).powi(2)
}

fn green_unchecked(r: Point, rp: Point, alpha: Complex64) -> Complex64 {
    let th = (alpha / 2.0).tanh();
    let pref = alpha.exp() / (2.0 * PI * alpha.sinh());
    pref * (-(dist2(r, rp) / (2.0 * th)) - sum2(r, rp) * th / 2.0).exp()
}

/// Harmonic-oscillator Green's function in closed form. Requires `Re α > 0`.
pub fn green_function(r: Point, rp: Point, alpha: Complex64) -> Result<Complex64> {
    if !(alpha.re > 0.0) || !alpha.im.is_finite() {
        return Err(Error::validation(format!("green function needs Re(alpha) > 0, got {alpha}")));
    }
    Ok(green_unchecked(r, rp, alpha))
}

fn green_even(r: Point, rp: Point, alpha: Complex64) -> Complex64 {
    (green_unchecked(r, rp, alpha) + green_unchecked(r, [-rp[0], -rp[1]], alpha)) / 2.0
}

/// Confocal interaction `D(r, r')` for real smoothing parameter `alpha`.
pub fn confocal_interaction_alpha(r: Point, rp: Point, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::validation(format!("alpha must be positive, got {alpha}")));
    }
    let a = Complex64::new(alpha, 0.0);
    let d = (green_even(r, rp, a) + green_even(r, rp, a + Complex64::new(0.0, FRAC_PI_2))) / 2.0;
    if d.im.abs() > IMAG_REJECT * d.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::numerical(format!(
            "confocal interaction has imaginary residue {:e} at |D| = {:e}",
            d.im,
            d.norm()
        )));
    }
    Ok(d.re)
}

pub fn confocal_interaction(r: Point, rp: Point, params: &CavityParams) -> Result<f64> {
    confocal_interaction_alpha(r, rp, params.alpha)
}

/// Symmetric coupling matrix with its spectral decomposition.
///
/// Eigenvalues are sorted descending; column `k` of `eigenvectors` is `v^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub entries: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl CouplingMatrix {
    /// Decompose a symmetric matrix, clamping tiny negative eigenvalues to zero.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::validation("coupling matrix must be square and nonempty"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("coupling matrix has non-finite entries"));
        }
        for i in 0..n {
            for j in 0..i {
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(Error::validation(format!("coupling matrix not symmetric at ({i},{j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(entries.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut eigenvalues = Vec::with_capacity(n);
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (k, &src) in order.iter().enumerate() {
            let mut lam = eig.eigenvalues[src];
            if lam < 0.0 {
                if lam < -EPS_CLAMP * scale {
                    return Err(Error::numerical(format!(
                        "coupling matrix eigenvalue {lam:e} is negative beyond clamp tolerance (scale {scale:e})"
                    )));
                }
                lam = 0.0;
            }
            eigenvalues.push(lam);
            let mut col = eig.eigenvectors.column(src).into_owned();
            // Fix the sign so the largest-magnitude component is positive.
            let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if pivot < 0.0 {
                col.neg_mut();
            }
            eigenvectors.set_column(k, &col);
        }
        Ok(CouplingMatrix { entries, eigenvalues, eigenvectors })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Uniformly scaled copy, used for scale-invariance checks.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        CouplingMatrix::from_matrix(&self.entries * c)
    }
}

/// `J_ij = D(r_i, r_j)`, including the diagonal.
pub fn build_coupling_matrix(layout: &SpinLayout, params: &CavityParams) -> Result<CouplingMatrix> {
    params.validate()?;
    let n = layout.n_spins();
    if n == 0 {
        return Err(Error::validation("layout must be nonempty"));
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = confocal_interaction(layout.positions[i], layout.positions[j], params)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CouplingMatrix::from_matrix(m)
}

/// Normalized Hermite functions `psi_0..=psi_nmax` at `u`.
pub fn hermite_functions(u: f64, nmax: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(nmax + 1);
    psi.push(PI.powf(-0.25) * (-u * u / 2.0).exp());
    if nmax >= 1 {
        psi.push(2f64.sqrt() * u * psi[0]);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * u * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

/// Which Hermite-Gauss modes a truncated sum includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSet {
    All,
    /// `l + m ≡ 0 (mod 4)`: the family coupling to atoms in one longitudinal quadrature.
    Confocal,
}

/// Truncated Hermite-Gauss mode sum over `l + m <= order`.
///
/// `Xi_lm(r) = psi_l(√2 x) psi_m(√2 y)` in waist units; with `ModeSet::All`
/// this converges to [`green_function`], with `ModeSet::Confocal` to the
/// confocal interaction at real `alpha`.
pub fn mode_sum(r: Point, rp: Point, alpha: Complex64, order: usize, set: ModeSet) -> Complex64 {
    let s2 = 2f64.sqrt();
    let hx = hermite_functions(s2 * r[0], order);
    let hy = hermite_functions(s2 * r[1], order);
    let hxp = hermite_functions(s2 * rp[0], order);
    let hyp = hermite_functions(s2 * rp[1], order);
    let t = (-alpha).exp();
    let mut tn = Complex64::new(1.0, 0.0);
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..=order {
        if set == ModeSet::All || n % 4 == 0 {
            let shell: f64 = (0..=n).map(|l| hx[l] * hxp[l] * hy[n - l] * hyp[n - l]).sum();
            total += tn * shell;
        }
        tn *= t;
    }
    total
}

/// Upper bound on the magnitude of everything a mode sum truncated at `order` omits.
///
/// Uses `|psi_n| <= pi^{-1/4}` and the `n + 1` modes in each shell.
pub fn mode_sum_tail_bound(alpha_re: f64, order: usize) -> f64 {
    let t = (-alpha_re).exp();
    let n0 = (order + 1) as f64;
    // sum_{n >= n0} (n + 1) t^n, closed form.
    t.powf(n0) * ((n0 + 1.0) / (1.0 - t) + t / (1.0 - t).powi(2)) / PI
}

/// Smallest truncation order whose tail bound is below `tol`.
pub fn order_for_tail(alpha_re: f64, tol: f64) -> usize {
    let mut order = 0;
    while mode_sum_tail_bound(alpha_re, order) >= tol {
        order += 1;
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn green_at_origin() {
        let a = 0.02;
        let g = green_function([0.0, 0.0], [0.0, 0.0], Complex64::new(a, 0.0)).unwrap();
        assert_relative_eq!(g.re, a.exp() / (2.0 * PI * a.sinh()), max_relative = 1e-14);
        assert_eq!(g.im, 0.0);
    }

    #[test]
    fn green_rejects_nonpositive_real_part() {
        assert!(green_function([0.0; 2], [0.0; 2], Complex64::new(0.0, 1.0)).is_err());
        assert!(green_function([0.0; 2], [0.0; 2], Complex64::new(-0.1, 0.0)).is_err());
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let h = 0.01;
        let nmax = 6;
        let mut gram = vec![vec![0.0; nmax + 1]; nmax + 1];
        let mut u = -12.0;
        while u <= 12.0 {
            let p = hermite_functions(u, nmax);
            for a in 0..=nmax {
                for b in 0..=nmax {
                    gram[a][b] += p[a] * p[b] * h;
                }
            }
            u += h;
        }
        for a in 0..=nmax {
            for b in 0..=nmax {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a][b] - want).abs() < 1e-9, "{a},{b}: {}", gram[a][b]);
            }
        }
    }

    #[test]
    fn single_spin_matrix() {
        let layout = SpinLayout::new(vec![[0.3, -0.7]], 1).unwrap();
        let j = build_coupling_matrix(&layout, &CavityParams::default()).unwrap();
        assert!(j.get(0, 0) > 0.0);
        assert_eq!(j.lambda_max(), j.get(0, 0));
    }

    #[test]
    fn clamp_and_reject_negative_eigenvalues() {
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        let j = CouplingMatrix::from_matrix(tiny).unwrap();
        assert_eq!(j.eigenvalues, vec![1.0, 0.0]);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-3]);
        assert!(CouplingMatrix::from_matrix(bad).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_positions(Regime::SpinGlass, 15, 1, 9).unwrap();
        let b = sample_positions(Regime::SpinGlass, 15, 1, 9).unwrap();
        assert_eq!(a, b);
    }
}
