//! Drive schedules and the atom-only model coefficients.
//!
//! Every frequency here is angular (rad/s) and every time is in seconds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::cavity::{CavityParams, CouplingMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub g_final_sq_over_gc_sq: f64,
    pub omega_z0: f64,
    pub ramp_start: f64,
    pub ramp_end: f64,
    pub quench: bool,
}

impl Default for DriveParams {
    fn default() -> Self {
        DriveParams {
            g_final_sq_over_gc_sq: 5.0,
            omega_z0: 2.0 * PI * 10e3,
            ramp_start: 100e-6,
            ramp_end: 700e-6,
            quench: false,
        }
    }
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ramp_end > self.ramp_start
            && self.ramp_start >= 0.0
            && self.g_final_sq_over_gc_sq > 0.0
            && self.omega_z0 >= 0.0
            && [self.g_final_sq_over_gc_sq, self.omega_z0, self.ramp_start, self.ramp_end]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid drive parameters: {self:?}")))
        }
    }

    /// Ramp fraction `f(t)`: zero, cubic smoothstep, then one.
    pub fn ramp_fraction(&self, t: f64) -> f64 {
        if self.quench {
            return if t > 0.0 { 1.0 } else { 0.0 };
        }
        if t <= self.ramp_start {
            0.0
        } else if t >= self.ramp_end {
            1.0
        } else {
            let x = (t - self.ramp_start) / (self.ramp_end - self.ramp_start);
            x * x * (3.0 - 2.0 * x)
        }
    }

    /// `(g(t), omega_z(t))` for a given critical coupling.
    pub fn schedule_values(&self, t: f64, g_c: f64) -> (f64, f64) {
        let f = self.ramp_fraction(t);
        (g_c * (self.g_final_sq_over_gc_sq * f).sqrt(), self.omega_z0 * (1.0 - f))
    }

    /// Time at which `g(t) = g_c`, i.e. `f(t_c) = 1 / g_final_sq_over_gc_sq`.
    ///
    /// `None` when the final pump never reaches threshold.
    pub fn threshold_time(&self) -> Option<f64> {
        let c = 1.0 / self.g_final_sq_over_gc_sq;
        if c > 1.0 {
            return None;
        }
        if self.quench {
            return Some(0.0);
        }
        // Inverse of 3x^2 - 2x^3 on [0, 1].
        let x = 0.5 - ((1.0 - 2.0 * c).asin() / 3.0).sin();
        Some(self.ramp_start + x * (self.ramp_end - self.ramp_start))
    }
}

/// `(alpha_+, alpha_-)` for a fully degenerate cavity.
pub fn alpha_coefficients(omega_z: f64, delta_c: f64, kappa: f64) -> Result<(Complex64, Complex64)> {
    if delta_c == 0.0 {
        return Err(Error::validation("delta_c must be nonzero"));
    }
    let d = Complex64::new(delta_c, 0.0);
    let a = d / Complex64::new(-delta_c + omega_z, -kappa);
    let b = d / Complex64::new(-delta_c - omega_z, -kappa);
    let minus = if omega_z == 0.0 { Complex64::new(0.0, 0.0) } else { a - b };
    Ok((a + b, minus))
}

/// Semiclassical critical coupling from the largest eigenvalue of `J`.
pub fn critical_coupling(lambda_max: f64, omega_z: f64, delta_c: f64, kappa: f64, m: f64) -> Result<f64> {
    if !(lambda_max > 0.0) {
        return Err(Error::validation(format!("lambda_max must be positive, got {lambda_max}")));
    }
    if !(omega_z > 0.0) {
        return Err(Error::validation(format!("omega_z must be positive, got {omega_z}")));
    }
    if !(m >= 1.0) || delta_c == 0.0 {
        return Err(Error::validation("need M >= 1 and nonzero delta_c"));
    }
    Ok((omega_z * (delta_c * delta_c + kappa * kappa) / (lambda_max * delta_c.abs() * m)).sqrt())
}

/// Linear-stability eigenvalues of the normal phase.
///
/// The first `N` entries follow the spectrum of `J` (descending), the last
/// `N` are the trivially-one branch.
pub fn stability_eigenvalues(
    g: f64,
    eigenvalues: &[f64],
    omega_z: f64,
    delta_c: f64,
    kappa: f64,
    m: f64,
) -> Result<Vec<f64>> {
    if !(omega_z > 0.0) {
        return Err(Error::validation(format!("omega_z must be positive, got {omega_z}")));
    }
    let s = m * g * g * delta_c.abs() / (omega_z * (delta_c * delta_c + kappa * kappa));
    let mut out: Vec<f64> = eigenvalues.iter().map(|l| 1.0 - s * l).collect();
    out.extend(std::iter::repeat_n(1.0, eigenvalues.len()));
    Ok(out)
}

/// Instantaneous coefficients of the atom-only model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCoefficients {
    pub alpha_plus: Complex64,
    pub alpha_minus: Complex64,
    pub g: f64,
    pub delta_c: f64,
    pub kappa: f64,
    pub omega_z: f64,
}

impl ModelCoefficients {
    pub fn new(g: f64, omega_z: f64, delta_c: f64, kappa: f64) -> Result<Self> {
        let (alpha_plus, alpha_minus) = alpha_coefficients(omega_z, delta_c, kappa)?;
        Ok(ModelCoefficients { alpha_plus, alpha_minus, g, delta_c, kappa, omega_z })
    }

    pub fn at_time(t: f64, drive: &DriveParams, cavity: &CavityParams, g_c: f64) -> Result<Self> {
        let (g, wz) = drive.schedule_values(t, g_c);
        Self::new(g, wz, cavity.delta_c, cavity.kappa)
    }

    /// Dissipation scale `g^2 kappa / (4 delta_c^2)`.
    pub fn rho0(&self) -> f64 {
        self.g * self.g * self.kappa / (4.0 * self.delta_c * self.delta_c)
    }

    /// Prefactor `-g^2 / (4 delta_c)` of the interaction part of `H`.
    pub fn interaction_scale(&self) -> f64 {
        -self.g * self.g / (4.0 * self.delta_c)
    }
}

/// One diagonal collapse operator `C_k = prefactor * sum_i v_i (alpha_+ S^x_i + i alpha_- S^y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseSpec {
    pub k: usize,
    pub prefactor: Complex64,
    pub v: Vec<f64>,
    /// `a_i`, the weight of `S^x_i`.
    pub a: Vec<Complex64>,
    /// `b_i`, the weight of `S^y_i`.
    pub b: Vec<Complex64>,
}

pub fn collapse_specs(j: &CouplingMatrix, coeffs: &ModelCoefficients) -> Vec<CollapseSpec> {
    let i_unit = Complex64::new(0.0, 1.0);
    (0..j.n())
        .map(|k| {
            let prefactor = Complex64::new(
                coeffs.g * (j.eigenvalues[k] * coeffs.kappa).sqrt() / (2.0 * coeffs.delta_c),
                0.0,
            );
            let v = j.eigenvector(k);
            let a = v.iter().map(|&x| prefactor * x * coeffs.alpha_plus).collect();
            let b = v.iter().map(|&x| prefactor * x * i_unit * coeffs.alpha_minus).collect();
            CollapseSpec { k, prefactor, v, a, b }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimates {
    /// Summed decoherence rate per spin, 1/s.
    pub decoherence_per_spin: f64,
    /// Estimated total homodyne detection rate, 1/s.
    pub detection_rate: f64,
}

/// Closed-form rate estimates.
///
/// `omega_z` is the transverse field entering the bare detection rate; at
/// full ramp the instantaneous field vanishes, so callers pass the initial
/// field `omega_z0` there.
pub fn rate_estimates(
    g: f64,
    eigenvalues: &[f64],
    delta_c: f64,
    kappa: f64,
    omega_z: f64,
    g_c: f64,
    beta: f64,
) -> RateEstimates {
    let sum_l: f64 = eigenvalues.iter().sum();
    let decoherence_per_spin = kappa * g * g / (delta_c * delta_c) * sum_l;
    let detection_rate = eigenvalues
        .iter()
        .map(|l| (l * kappa * omega_z * g * g / (delta_c.abs() * g_c * g_c) * beta * beta).sqrt())
        .sum();
    RateEstimates { decoherence_per_spin, detection_rate }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTemperature {
    /// `(delta_c^2 + kappa^2) / (4 delta_c)`, carrying the sign of `delta_c`.
    pub signed: f64,
    pub magnitude: f64,
}

pub fn effective_temperature(delta_c: f64, kappa: f64) -> Result<EffectiveTemperature> {
    if delta_c == 0.0 {
        return Err(Error::validation("delta_c must be nonzero"));
    }
    let signed = (delta_c * delta_c + kappa * kappa) / (4.0 * delta_c);
    Ok(EffectiveTemperature { signed, magnitude: signed.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ramp_boundaries() {
        let d = DriveParams::default();
        assert_eq!(d.ramp_fraction(0.0), 0.0);
        assert_eq!(d.ramp_fraction(100e-6), 0.0);
        assert_eq!(d.ramp_fraction(700e-6), 1.0);
        assert_relative_eq!(d.ramp_fraction(400e-6), 0.5, epsilon = 1e-12);
        let q = DriveParams { quench: true, ..d };
        assert_eq!(q.ramp_fraction(0.0), 0.0);
        assert_eq!(q.ramp_fraction(1e-12), 1.0);
    }

    #[test]
    fn schedule_endpoints() {
        let d = DriveParams::default();
        let (g, wz) = d.schedule_values(700e-6, 3.0);
        assert_relative_eq!(g * g, 45.0, max_relative = 1e-12);
        assert_eq!(wz, 0.0);
        let (g, wz) = d.schedule_values(0.0, 3.0);
        assert_eq!(g, 0.0);
        assert_eq!(wz, 2.0 * PI * 10e3);
    }

    #[test]
    fn alpha_minus_vanishes_without_field() {
        let (ap, am) = alpha_coefficients(0.0, -2.0 * PI * 80e6, 2.0 * PI * 260e3).unwrap();
        assert_eq!(am, Complex64::new(0.0, 0.0));
        assert_relative_eq!(ap.norm(), 2.0, max_relative = 1e-4);
        assert!(alpha_coefficients(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn stability_at_zero_coupling() {
        let ev = stability_eigenvalues(0.0, &[3.0, 1.0], 1.0, -10.0, 1.0, 1.0).unwrap();
        assert_eq!(ev, vec![1.0; 4]);
        assert!(stability_eigenvalues(0.0, &[1.0], 0.0, -10.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn temperature_limits() {
        let t = effective_temperature(-8.0, 0.0).unwrap();
        assert_eq!(t.signed, -2.0);
        assert_eq!(t.magnitude, 2.0);
        let a = effective_temperature(-3.0, 1.5).unwrap().signed;
        let b = effective_temperature(-6.0, 3.0).unwrap().signed;
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-15);
    }
}
