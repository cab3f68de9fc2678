use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on the number of spins a state vector may hold.
pub const DEFAULT_MAX_SPINS: usize = 15;
/// Hard cap; beyond this the state vector no longer fits comfortably in memory.
pub const HARD_MAX_SPINS: usize = 24;

/// Pure state of `n` spin-1/2 particles in the `sigma^x` product basis.
///
/// Bit `i` of an index is the `sigma^x_i` eigenvalue: `0 -> +1`, `1 -> -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

/// Single-spin expectations and entropy read off a pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMarginal {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub entropy: f64,
}

#[inline]
pub fn sign_of_bit(b: usize, i: usize) -> f64 {
    if (b >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl PureState {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::validation(format!("state length {len} is not 2^n with n >= 1")));
        }
        Ok(PureState { n: len.trailing_zeros() as usize, amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Scale to unit norm, returning the norm before scaling.
    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::numerical(format!("state norm collapsed to {norm:e}; reduce dt")));
        }
        let inv = 1.0 / norm;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(norm)
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Reduced density matrix of spin `i` as `(rho_00, rho_11, rho_01)` in the `(|+>, |->)` basis.
    pub fn reduced_density(&self, i: usize) -> (f64, f64, Complex64) {
        let mask = 1usize << i;
        let (mut p0, mut p1) = (0.0, 0.0);
        let mut c = Complex64::new(0.0, 0.0);
        for b in 0..self.dim() {
            if b & mask == 0 {
                let a0 = self.amps[b];
                let a1 = self.amps[b | mask];
                p0 += a0.norm_sqr();
                p1 += a1.norm_sqr();
                c += a0 * a1.conj();
            }
        }
        (p0, p1, c)
    }

    pub fn marginal(&self, i: usize) -> SpinMarginal {
        let (p0, p1, c) = self.reduced_density(i);
        SpinMarginal { x: p0 - p1, y: 2.0 * c.im, z: 2.0 * c.re, entropy: entropy_2x2(p0, p1, c) }
    }

    pub fn marginals(&self) -> Vec<SpinMarginal> {
        (0..self.n).map(|i| self.marginal(i)).collect()
    }
}

/// Von Neumann entropy (nats) of a 2x2 density matrix, with `0 ln 0 = 0`.
pub fn entropy_2x2(p0: f64, p1: f64, c: Complex64) -> f64 {
    let tr = p0 + p1;
    let half_gap = (((p0 - p1) / 2.0).powi(2) + c.norm_sqr()).sqrt();
    [tr / 2.0 + half_gap, tr / 2.0 - half_gap]
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

/// All spins in `|down>_z = (|+> - |->)/sqrt 2`.
pub fn initial_state(n: usize, max_spins: usize) -> Result<PureState> {
    if n == 0 || n > max_spins.min(HARD_MAX_SPINS) {
        return Err(Error::validation(format!("spin count {n} outside 1..={}", max_spins.min(HARD_MAX_SPINS))));
    }
    let amp = (0.5f64).powf(n as f64 / 2.0);
    let amps = (0..1usize << n)
        .map(|b| Complex64::new(if b.count_ones() % 2 == 0 { amp } else { -amp }, 0.0))
        .collect();
    Ok(PureState { n, amps })
}

pub fn entanglement_entropy(state: &PureState, i: usize) -> f64 {
    state.marginal(i).entropy
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_spin_initial_state() {
        let s = initial_state(1, 15).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amps[0].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amps[1].re, -r, epsilon = 1e-15);
        let m = s.marginal(0);
        assert_abs_diff_eq!(m.z, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.x, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn spin_count_bounds() {
        assert!(initial_state(0, 15).is_err());
        assert!(initial_state(16, 15).is_err());
        assert!(initial_state(15, 15).is_ok());
    }

    #[test]
    fn bell_state_entropy() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = PureState::from_amplitudes(vec![
            Complex64::new(r, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(r, 0.0),
        ])
        .unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(entanglement_entropy(&s, i), std::f64::consts::LN_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_norm_is_rejected() {
        let mut s = PureState::from_amplitudes(vec![Complex64::new(0.0, 0.0); 4]).unwrap();
        assert!(s.normalize().is_err());
    }
}
