use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::kernels::{add_xy_term, add_z_term, SpinTables};
use super::state::PureState;
use super::step::EffectiveTerms;
use crate::error::{Error, Result};
use crate::model::ModelCoefficients;
use crate::seeds::rng_from_seed;

/// `H |psi>` for the Hermitian atom-only Hamiltonian.
pub fn apply_hamiltonian(psi: &[Complex64], tables: &SpinTables, terms: &EffectiveTerms, out: &mut [Complex64]) {
    for ((o, p), d) in out.iter_mut().zip(psi).zip(&tables.ising) {
        *o = p * (terms.ising * d);
    }
    let field: Vec<Complex64> = terms.field.iter().map(|&h| Complex64::new(h, 0.0)).collect();
    if field.iter().any(|f| f.re != 0.0) {
        add_z_term(psi, &field, out);
    }
    if terms.xy != 0.0 {
        add_xy_term(psi, tables, Complex64::new(terms.xy, 0.0), out);
    }
}

pub fn energy(state: &PureState, tables: &SpinTables, coeffs: &ModelCoefficients) -> f64 {
    let terms = EffectiveTerms::new(tables, coeffs);
    let mut h = vec![Complex64::new(0.0, 0.0); state.dim()];
    apply_hamiltonian(&state.amps, tables, &terms, &mut h);
    state.amps.iter().zip(&h).map(|(a, b)| (a.conj() * b).re).sum()
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub vector: PureState,
    pub iterations: usize,
}

const MAX_KRYLOV: usize = 400;

/// Lowest eigenpair of `H` by Lanczos with full reorthogonalization.
pub fn ground_state(tables: &SpinTables, coeffs: &ModelCoefficients, seed: u64, rel_tol: f64) -> Result<GroundState> {
    let terms = EffectiveTerms::new(tables, coeffs);
    let dim = tables.dim();
    let mut rng = rng_from_seed(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let nv: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= nv);

    let mut basis: Vec<Vec<Complex64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let max_iter = MAX_KRYLOV.min(dim);

    loop {
        let m = basis.len();
        apply_hamiltonian(&basis[m - 1], tables, &terms, &mut w);
        let a: f64 = basis[m - 1].iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
        alphas.push(a);
        // Full reorthogonalization, applied twice for stability.
        for _ in 0..2 {
            for q in &basis {
                let c: Complex64 = q.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                w.iter_mut().zip(q).for_each(|(y, x)| *y -= c * x);
            }
        }
        let b = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();

        let (theta, coef) = lowest_ritz(&alphas, &betas);
        let scale = theta.abs().max(alphas.iter().fold(0.0f64, |s, x| s.max(x.abs()))).max(1e-300);
        let residual = b * coef.last().copied().unwrap_or(0.0).abs();
        let converged = residual <= rel_tol * scale;
        let breakdown = b <= 1e-13 * scale;
        if converged || breakdown || m >= max_iter {
            if !(converged || breakdown) {
                return Err(Error::numerical(format!(
                    "Lanczos did not converge in {m} iterations (residual {residual:e})"
                )));
            }
            let mut vec = vec![Complex64::new(0.0, 0.0); dim];
            for (q, c) in basis.iter().zip(&coef) {
                vec.iter_mut().zip(q).for_each(|(y, x)| *y += x * *c);
            }
            let mut vector = PureState::from_amplitudes(vec)?;
            vector.normalize()?;
            return Ok(GroundState { energy: theta, vector, iterations: m });
        }
        betas.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

fn lowest_ritz(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let k = (0..m).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap_or(0);
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}

/// `(E, E_0)` for the instantaneous Hamiltonian.
pub fn energy_diagnostics(
    state: &PureState,
    tables: &SpinTables,
    coeffs: &ModelCoefficients,
    seed: u64,
) -> Result<(f64, f64)> {
    let e0 = ground_state(tables, coeffs, seed, 1e-10)?.energy;
    Ok((energy(state, tables, coeffs), e0))
}
