//! Equilibrium overlap distribution of the classical Ising model and the
//! temperature fit against observed overlap histograms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::overlap::{bin_centers, Histogram};
use crate::cavity::Regime;
use crate::error::{Error, Result};
use crate::landscape::all_energies;

/// Exhaustive Boltzmann model for one `J`.
#[derive(Debug, Clone)]
pub struct ThermalModel {
    pub n: usize,
    energies: Vec<f64>,
    e_min: f64,
}

/// In-place unnormalized Walsh-Hadamard transform.
fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

impl ThermalModel {
    pub fn new(j: &DMatrix<f64>) -> Result<Self> {
        let energies = all_energies(j)?;
        let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(ThermalModel { n: j.nrows(), energies, e_min })
    }

    /// Boltzmann weights `p_s` at temperature `t` (energy units).
    pub fn weights(&self, t: f64) -> Vec<f64> {
        let mut p: Vec<f64> = self.energies.iter().map(|e| (-(e - self.e_min) / t).exp()).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        p
    }

    /// `P(q)` on the `N + 1` admissible values, over ordered state pairs.
    ///
    /// `sum_s p_s p_{s xor u}` is an XOR autocorrelation, so it is the
    /// inverse transform of the squared Walsh-Hadamard spectrum.
    pub fn distribution(&self, t: f64) -> Vec<f64> {
        let mut a = self.weights(t);
        walsh_hadamard(&mut a);
        a.iter_mut().for_each(|x| *x *= *x);
        walsh_hadamard(&mut a);
        let scale = a.len() as f64;
        let mut p = vec![0.0; self.n + 1];
        for (u, v) in a.iter().enumerate() {
            // Hamming distance d gives q = 1 - 2d/N, bin N - d.
            p[self.n - u.count_ones() as usize] += (v / scale).max(0.0);
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    }
}

pub fn thermal_overlap(j: &DMatrix<f64>, t: f64) -> Result<Histogram> {
    if !(t > 0.0) {
        return Err(Error::validation("temperature must be positive"));
    }
    let m = ThermalModel::new(j)?;
    let p = m.distribution(t);
    Ok(Histogram { centers: bin_centers(m.n), errors: vec![0.0; p.len()], probabilities: p, values: Vec::new() })
}

/// Mean `lambda_max` (spin glass) or mean `2 lambda_max` (ferromagnet).
pub fn tc_bar(lambda_max: &[f64], regime: Regime) -> Result<f64> {
    if lambda_max.is_empty() {
        return Err(Error::validation("empty J ensemble"));
    }
    let mean = lambda_max.iter().sum::<f64>() / lambda_max.len() as f64;
    Ok(match regime {
        Regime::SpinGlass => mean,
        Regime::Ferromagnetic => 2.0 * mean,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalFit {
    /// Fitted temperature, energy units.
    pub t_fit: f64,
    /// `t_fit / tc_bar`.
    pub t_over_tc: f64,
    pub residual: f64,
    /// `(T / tc_bar, residual)` on the coarse grid.
    pub grid: Vec<(f64, f64)>,
    /// Objective flat or minimized at the edge of the grid.
    pub unconstrained: bool,
}

pub const FIT_GRID_POINTS: usize = 200;
pub const FIT_GRID_RANGE: (f64, f64) = (1e-3, 10.0);
pub const FIT_REL_TOL: f64 = 1e-4;

/// Least-squares fit of `thermal_overlap(J, T)` to `observed` over all bins.
pub fn fit_temperature(observed: &Histogram, j: &DMatrix<f64>, tc_bar: f64) -> Result<ThermalFit> {
    let model = ThermalModel::new(j)?;
    if observed.probabilities.len() != model.n + 1 {
        return Err(Error::validation(format!(
            "histogram has {} bins but J has {} spins",
            observed.probabilities.len(),
            model.n
        )));
    }
    let total: f64 = observed.probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("observed histogram sums to {total}")));
    }
    if !(tc_bar > 0.0) {
        return Err(Error::validation("tc_bar must be positive"));
    }
    let objective = |log_t: f64| -> f64 {
        let p = model.distribution(log_t.exp());
        p.iter().zip(&observed.probabilities).map(|(a, b)| (a - b).powi(2)).sum()
    };
    let (lo, hi) = (FIT_GRID_RANGE.0.ln(), FIT_GRID_RANGE.1.ln());
    let step = (hi - lo) / (FIT_GRID_POINTS - 1) as f64;
    let logs: Vec<f64> = (0..FIT_GRID_POINTS).map(|k| lo + step * k as f64 + tc_bar.ln()).collect();
    let values: Vec<f64> = logs.iter().map(|&l| objective(l)).collect();
    let best = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("nonempty grid");

    // Golden section on log T between the neighbours of the grid minimum.
    let mut a = logs[best.saturating_sub(1)];
    let mut b = logs[(best + 1).min(logs.len() - 1)];
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > FIT_REL_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = objective(d);
        }
    }
    let (mut log_t, mut residual) = if fc <= fd { (c, fc) } else { (d, fd) };
    if values[best] < residual {
        log_t = logs[best];
        residual = values[best];
    }
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let flat = max - values[best] <= 1e-6 * max.max(f64::MIN_POSITIVE);
    let edge = best == 0 || best == values.len() - 1;
    let t_fit = log_t.exp();
    Ok(ThermalFit {
        t_fit,
        t_over_tc: t_fit / tc_bar,
        residual,
        grid: logs.iter().zip(&values).map(|(l, v)| (l.exp() / tc_bar, *v)).collect(),
        unconstrained: flat || edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walsh_hadamard_is_involutive_up_to_scale() {
        let mut v = vec![1.0, 2.0, -3.0, 0.5];
        walsh_hadamard(&mut v);
        walsh_hadamard(&mut v);
        assert_eq!(v, vec![4.0, 8.0, -12.0, 2.0]);
    }

    #[test]
    fn ferromagnet_zero_temperature_goal_posts() {
        let j = DMatrix::from_fn(4, 4, |a, b| if a == b { 0.0 } else { 1.0 });
        let h = thermal_overlap(&j, 1e-3).unwrap();
        assert!((h.probabilities[0] - 0.5).abs() < 1e-12);
        assert!((h.probabilities[4] - 0.5).abs() < 1e-12);
    }
}
