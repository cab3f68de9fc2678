//! Non-Hermitian evolution between jumps.
//!
//! `H_eff = H - (i/2) sum_k C_k^† C_k` splits into four pieces in the
//! `sigma^x` basis:
//!
//! * a diagonal Ising part `c_d d(b)`,
//! * a per-spin transverse part `sum_i eta_i S^z_i`,
//! * a mixed `sum_{i != j} J_ij S^x_i S^y_j` part,
//! * a `sum_{i != j} J_ij S^y_i S^y_j` part from the dissipator.
//!
//! The first two are exponentiated exactly; the last two are `O(alpha_-)`,
//! many orders of magnitude smaller, and take a forward-Euler step.

use num_complex::Complex64;

use super::kernels::{add_xy_term, add_yy_term, for_each_pair, SpinTables};
use super::state::PureState;
use crate::error::Result;
use crate::model::ModelCoefficients;

const I: Complex64 = Complex64::new(0.0, 1.0);
/// Skip a kernel whose relative contribution in one step is below this; over
/// a full run of `T / dt` steps the neglected amplitude stays below `1e-7`.
pub const NEGLIGIBLE: f64 = 1e-12;

/// Decomposed `H` and `H_eff` coefficients at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTerms {
    /// Hermitian Ising coefficient multiplying `d(b)`.
    pub ising: f64,
    /// Hermitian per-spin transverse field `h_i`.
    pub field: Vec<f64>,
    /// Hermitian `S^x S^y` coefficient.
    pub xy: f64,
    /// Non-Hermitian counterparts.
    pub eff_diag: Complex64,
    pub eff_field: Vec<Complex64>,
    pub eff_xy: Complex64,
    pub eff_yy: Complex64,
}

impl EffectiveTerms {
    pub fn new(tables: &SpinTables, c: &ModelCoefficients) -> Self {
        let s = c.interaction_scale();
        let rho0 = c.rho0();
        let ap = c.alpha_plus;
        let am = c.alpha_minus;
        let cross = ap.conj() * am;
        let ising = 2.0 * s * ap.re;
        let field: Vec<f64> = (0..tables.n).map(|i| c.omega_z - s * tables.jij(i, i) * am.re).collect();
        let xy = -2.0 * s * am.im;
        let eff_field = field
            .iter()
            .enumerate()
            .map(|(i, &h)| Complex64::new(h, 0.5 * rho0 * cross.re * tables.jij(i, i)))
            .collect();
        EffectiveTerms {
            ising,
            xy,
            eff_diag: Complex64::new(ising, -0.5 * rho0 * ap.norm_sqr()),
            eff_field,
            eff_xy: Complex64::new(xy, rho0 * cross.im),
            eff_yy: Complex64::new(0.0, -0.5 * rho0 * am.norm_sqr()),
            field,
        }
    }
}

/// Stateful stepper caching the diagonal propagator between calls.
#[derive(Debug, Clone, Default)]
pub struct Stepper {
    diag_key: Option<(Complex64, f64)>,
    diag: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Stepper {
    pub fn new() -> Self {
        Self::default()
    }

    /// One step of `d psi = -i H_eff psi dt`, then renormalize.
    ///
    /// Returns the norm before renormalization.
    pub fn step(&mut self, state: &mut PureState, tables: &SpinTables, terms: &EffectiveTerms, dt: f64) -> Result<f64> {
        let dim = state.dim();
        let n = state.n;

        if self.diag_key != Some((terms.eff_diag, dt)) || self.diag.len() != dim {
            let c = -I * terms.eff_diag * dt;
            self.diag = tables.ising.iter().map(|&d| (c * d).exp()).collect();
            self.diag_key = Some((terms.eff_diag, dt));
        }
        state.amps.iter_mut().zip(&self.diag).for_each(|(a, f)| *a *= f);

        for i in 0..n {
            let eta = terms.eff_field[i];
            if eta == Complex64::new(0.0, 0.0) {
                continue;
            }
            // exp(-i dt eta sigma^z / 2) with sigma^z a bit flip.
            let a = eta * dt * 0.5;
            let (cs, sn) = (a.cos(), -I * a.sin());
            for_each_pair(&mut state.amps, i, |p, q| {
                let (a, b) = (*p, *q);
                *p = cs * a + sn * b;
                *q = cs * b + sn * a;
            });
        }

        // Both pair sums have operator norm at most sum |J_ij| / 4.
        let bound = tables.j.iter().map(|v| v.abs()).sum::<f64>() / 4.0 * dt;
        let xy_on = terms.eff_xy.norm() * bound > NEGLIGIBLE;
        let yy_on = terms.eff_yy.norm() * bound > NEGLIGIBLE;
        if xy_on || yy_on {
            self.scratch.clear();
            self.scratch.resize(dim, Complex64::new(0.0, 0.0));
            if xy_on {
                add_xy_term(&state.amps, tables, -I * dt * terms.eff_xy, &mut self.scratch);
            }
            if yy_on {
                add_yy_term(&state.amps, tables, -I * dt * terms.eff_yy, &mut self.scratch);
            }
            state.amps.iter_mut().zip(&self.scratch).for_each(|(a, d)| *a += d);
        }

        state.normalize()
    }
}

/// Single effective step with a fresh cache.
pub fn effective_step(
    state: &mut PureState,
    tables: &SpinTables,
    coeffs: &ModelCoefficients,
    dt: f64,
) -> Result<f64> {
    Stepper::new().step(state, tables, &EffectiveTerms::new(tables, coeffs), dt)
}
