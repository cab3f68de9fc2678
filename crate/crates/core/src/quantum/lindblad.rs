//! Dense master-equation reference for a handful of spins.
//!
//! Operators are assembled from Kronecker products of 2x2 matrices, with no
//! reuse of the state-vector kernels, so this path can serve as an oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cavity::CouplingMatrix;
use crate::error::{Error, Result};
use crate::model::ModelCoefficients;

pub type CMatrix = DMatrix<Complex64>;

pub const MAX_DENSE_SPINS: usize = 4;
const TRACE_DRIFT: f64 = 1e-6;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-spin operators in the `(|+>, |->)` basis, spin-1/2 normalization.
pub fn spin_matrices() -> [CMatrix; 3] {
    let z = c(0.0, 0.0);
    let sx = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), z, z, c(-0.5, 0.0)]);
    let sy = CMatrix::from_row_slice(2, 2, &[z, c(0.0, 0.5), c(0.0, -0.5), z]);
    let sz = CMatrix::from_row_slice(2, 2, &[z, c(0.5, 0.0), c(0.5, 0.0), z]);
    [sx, sy, sz]
}

/// `op` acting on spin `site` of `n`; spin 0 is the least significant bit.
pub fn embed(op: &CMatrix, site: usize, n: usize) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    let mut out = CMatrix::identity(1, 1);
    for s in (0..n).rev() {
        out = out.kronecker(if s == site { op } else { &id });
    }
    out
}

/// Spin operators `[S^x_i, S^y_i, S^z_i]` for every site.
pub fn site_operators(n: usize) -> Vec<[CMatrix; 3]> {
    let [sx, sy, sz] = spin_matrices();
    (0..n).map(|i| [embed(&sx, i, n), embed(&sy, i, n), embed(&sz, i, n)]).collect()
}

/// Dense `H` and collapse operators `C_k` at fixed coefficients.
pub fn dense_model(j: &CouplingMatrix, coeffs: &ModelCoefficients) -> (CMatrix, Vec<CMatrix>) {
    let n = j.n();
    let ops = site_operators(n);
    let dim = 1 << n;
    let iu = c(0.0, 1.0);
    let a: Vec<CMatrix> =
        ops.iter().map(|o| &o[0] * coeffs.alpha_plus + &o[1] * (iu * coeffs.alpha_minus)).collect();
    let mut h = CMatrix::zeros(dim, dim);
    for o in &ops {
        h += &o[2] * c(coeffs.omega_z, 0.0);
    }
    let s = c(coeffs.interaction_scale(), 0.0);
    for i in 0..n {
        for jj in 0..n {
            let term = &ops[i][0] * &a[jj];
            h += (&term + term.adjoint()) * (s * j.get(i, jj));
        }
    }
    let collapse = (0..n)
        .map(|k| {
            let pref = coeffs.g * (j.eigenvalues[k] * coeffs.kappa).sqrt() / (2.0 * coeffs.delta_c);
            let mut ck = CMatrix::zeros(dim, dim);
            for i in 0..n {
                ck += &a[i] * c(pref * j.eigenvectors[(i, k)], 0.0);
            }
            ck
        })
        .collect();
    (h, collapse)
}

/// `d rho / dt = -i[H, rho] + sum_k (C rho C^† - {C^† C, rho}/2)`.
pub fn lindblad_rhs(rho: &CMatrix, h: &CMatrix, collapse: &[CMatrix]) -> CMatrix {
    let iu = c(0.0, 1.0);
    let mut out = (h * rho - rho * h) * (-iu);
    for ck in collapse {
        let cd = ck.adjoint();
        let cdc = &cd * ck;
        out += ck * rho * &cd - (&cdc * rho + rho * &cdc) * c(0.5, 0.0);
    }
    out
}

/// Integrate the master equation with RK4 and return `rho` at each checkpoint.
///
/// `coeffs_at` supplies the model coefficients at any time.
pub fn lindblad_reference<F>(
    j: &CouplingMatrix,
    coeffs_at: F,
    rho0: CMatrix,
    checkpoints: &[f64],
    dt: f64,
) -> Result<Vec<CMatrix>>
where
    F: Fn(f64) -> Result<ModelCoefficients>,
{
    if j.n() > MAX_DENSE_SPINS {
        return Err(Error::validation(format!("dense reference supports at most {MAX_DENSE_SPINS} spins")));
    }
    if !(dt > 0.0) {
        return Err(Error::validation("dt must be positive"));
    }
    let mut rho = rho0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let rhs_at = |t: f64, r: &CMatrix| -> Result<CMatrix> {
        let (h, cs) = dense_model(j, &coeffs_at(t)?);
        Ok(lindblad_rhs(r, &h, &cs))
    };
    for &target in checkpoints {
        while t < target {
            let h = dt.min(target - t);
            let k1 = rhs_at(t, &rho)?;
            let k2 = rhs_at(t + h / 2.0, &(&rho + &k1 * c(h / 2.0, 0.0)))?;
            let k3 = rhs_at(t + h / 2.0, &(&rho + &k2 * c(h / 2.0, 0.0)))?;
            let k4 = rhs_at(t + h, &(&rho + &k3 * c(h, 0.0)))?;
            rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
            t = if target - (t + h) <= 1e-12 * target { target } else { t + h };
            let drift = (rho.trace().re - 1.0).abs();
            if drift > TRACE_DRIFT || !drift.is_finite() {
                return Err(Error::numerical(format!("trace drifted by {drift:e} at t = {t:e}; reduce dt")));
            }
        }
        out.push(rho.clone());
    }
    Ok(out)
}

/// `|psi><psi|`.
pub fn projector(amps: &[Complex64]) -> CMatrix {
    let v = nalgebra::DVector::from_column_slice(amps);
    &v * v.adjoint()
}

/// `(1/2) || a - b ||_1` for Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a - b;
    let herm = (&d + d.adjoint()) * c(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().map(|l| l.abs()).sum::<f64>() / 2.0
}

pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    let herm = (rho + rho.adjoint()) * c(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
