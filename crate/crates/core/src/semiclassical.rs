//! Mean-field stochastic dynamics of `N` collective spins of size `M`.
//!
//! Spin components are expectations `<S^a_i>` with full length `M/2`; the
//! homodyne noise is a real Wiener process per collapse channel.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cavity::{CavityParams, CouplingMatrix};
use crate::error::{Error, Result};
use crate::landscape::ProductEnergy;
use crate::model::{DriveParams, ModelCoefficients};
use crate::seeds::rng_from_seed;

pub type Spin = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub sample_interval: f64,
    pub noise: bool,
    /// Start from a small deterministic tilt off the pole.
    pub tilt: bool,
    pub record_energy: bool,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig { dt: 1e-9, t_final: 4e-3, sample_interval: 10e-6, noise: true, tilt: true, record_energy: true }
    }
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt > 0.0 && self.t_final > 0.0 && self.sample_interval > 0.0 {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid SDE config: {self:?}")))
        }
    }
}

/// Initial polar tilt, radians.
pub const INITIAL_TILT: f64 = 1e-6;

/// Deterministic increments of every spin.
pub fn drift(spins: &[Spin], j: &CouplingMatrix, c: &ModelCoefficients, out: &mut [Spin]) {
    let n = spins.len();
    let d = c.delta_c;
    let g2 = c.g * c.g;
    let ap = c.alpha_plus;
    let am = c.alpha_minus;
    let cross = ap.conj() * am;
    let a = g2 / (2.0 * d);
    let r = c.kappa / d * cross.re;
    let p = am.im - r;
    let q = am.im + r;
    for i in 0..n {
        let jii = j.get(i, i);
        let hz = c.omega_z + am.re * g2 * jii / (4.0 * d);
        let damp = g2 * c.kappa * jii / (4.0 * d * d);
        let (mut fx, mut fy) = (0.0, 0.0);
        for k in 0..n {
            fx += j.get(i, k) * spins[k][0];
            fy += j.get(i, k) * spins[k][1];
        }
        let [sx, sy, sz] = spins[i];
        out[i] = [
            -hz * sy + a * sz * p * fx - damp * (cross.im * sy + am.norm_sqr() * sx),
            hz * sx + a * sz * (2.0 * ap.re * fx - q * fy) - damp * (cross.im * sx + ap.norm_sqr() * sy),
            a * (am.im * (sy * fy - sx * fx) + r * (sx * fx + sy * fy) - 2.0 * ap.re * sy * fx)
                - damp * (ap.norm_sqr() + am.norm_sqr()) * sz,
        ];
    }
}

/// Stochastic increments for real Wiener increments `dw` (one per channel).
pub fn diffusion(spins: &[Spin], j: &CouplingMatrix, c: &ModelCoefficients, dw: &[f64], out: &mut [Spin]) {
    let n = spins.len();
    let amp = c.g * c.kappa.sqrt() / (std::f64::consts::SQRT_2 * c.delta_c);
    let re_am = c.alpha_minus.re;
    let im_ap = c.alpha_plus.im;
    for i in 0..n {
        let xi: f64 = (0..n).map(|k| j.eigenvalues[k].sqrt() * j.eigenvectors[(i, k)] * dw[k]).sum();
        let [sx, sy, sz] = spins[i];
        out[i] = [
            amp * sz * re_am * xi,
            -amp * sz * im_ap * xi,
            amp * (im_ap * sy - re_am * sx) * xi,
        ];
    }
}

/// Classical energy functional whose Hamiltonian flow is the non-dissipative drift.
pub fn classical_energy(spins: &[Spin], j: &CouplingMatrix, c: &ModelCoefficients) -> f64 {
    let n = spins.len();
    let s = c.interaction_scale();
    let mut e = 0.0;
    for i in 0..n {
        let hz = c.omega_z - s * j.get(i, i) * c.alpha_minus.re;
        e += hz * spins[i][2];
        for k in 0..n {
            let jik = j.get(i, k);
            e += 2.0 * s * jik * (c.alpha_plus.re * spins[i][0] * spins[k][0] - c.alpha_minus.im * spins[i][0] * spins[k][1]);
        }
    }
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalRecord {
    pub seed: u64,
    pub m: f64,
    pub times: Vec<f64>,
    /// `2 <S^a_i> / M`, directly comparable with `<sigma^a_i>`.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    /// Product-state `<H>` at each sample.
    pub energy: Option<Vec<f64>>,
    pub steps: u64,
    /// Largest relative length change absorbed by renormalization.
    pub max_renorm: f64,
}

impl ClassicalRecord {
    fn rms_x(&self) -> Vec<f64> {
        self.x.iter().map(|x| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()).collect()
    }

    /// First sample time at which the rms `|x|` exceeds `level`.
    pub fn organization_onset(&self, level: f64) -> Option<f64> {
        self.rms_x().iter().zip(&self.times).find_map(|(&r, &t)| (r > level).then_some(t))
    }

    /// Start of the growth that leads to organization: the last local minimum
    /// of the rms `|x|` before it first exceeds `level`.
    ///
    /// Below threshold the transverse components precess and the rms
    /// oscillates; the soft mode stops oscillating at the instability, so the
    /// final trough marks where exponential growth begins.
    pub fn instability_onset(&self, level: f64) -> Option<f64> {
        let rms = self.rms_x();
        let mut k = rms.iter().position(|&r| r > level)?;
        while k > 0 && rms[k - 1] < rms[k] {
            k -= 1;
        }
        Some(self.times[k])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClassicalModel<'a> {
    pub j: &'a CouplingMatrix,
    pub cavity: CavityParams,
    pub drive: DriveParams,
    /// Critical coupling for ensembles of size `m`.
    pub g_c: f64,
    pub m: f64,
}

pub fn initial_spins(j: &CouplingMatrix, m: f64, tilt: bool) -> Vec<Spin> {
    let len = m / 2.0;
    let vmax = j.eigenvector(0);
    vmax.iter()
        .map(|&v| {
            if tilt {
                let s = if v < 0.0 { -1.0 } else { 1.0 };
                [len * s * INITIAL_TILT.sin(), 0.0, -len * INITIAL_TILT.cos()]
            } else {
                [0.0, 0.0, -len]
            }
        })
        .collect()
}

/// Euler-Maruyama with per-step renormalization of every spin to length `M/2`.
pub fn integrate_semiclassical(model: &ClassicalModel<'_>, sde: &SdeConfig, seed: u64) -> Result<ClassicalRecord> {
    sde.validate()?;
    if !(model.m >= 1.0) {
        return Err(Error::validation("ensemble size M must be at least 1"));
    }
    let n = model.j.n();
    let len = model.m / 2.0;
    let mut spins = initial_spins(model.j, model.m, sde.tilt);
    let mut rng = rng_from_seed(seed);
    let mut rec = ClassicalRecord {
        seed,
        m: model.m,
        times: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        z: Vec::new(),
        energy: sde.record_energy.then(Vec::new),
        steps: 0,
        max_renorm: 0.0,
    };
    let push = |rec: &mut ClassicalRecord, t: f64, spins: &[Spin]| -> Result<()> {
        rec.times.push(t);
        rec.x.push(spins.iter().map(|s| s[0] / len).collect());
        rec.y.push(spins.iter().map(|s| s[1] / len).collect());
        rec.z.push(spins.iter().map(|s| s[2] / len).collect());
        if let Some(e) = rec.energy.as_mut() {
            let c = ModelCoefficients::at_time(t, &model.drive, &model.cavity, model.g_c)?;
            let dirs: Vec<[f64; 3]> = spins.iter().map(|s| [s[0] / len, s[1] / len, s[2] / len]).collect();
            e.push(ProductEnergy::new(&model.j.entries, &c, model.m).energy(&dirs));
        }
        Ok(())
    };
    push(&mut rec, 0.0, &spins)?;

    let n_samples = (sde.t_final / sde.sample_interval + 1e-9).floor() as usize + 1;
    let mut d = vec![[0.0; 3]; n];
    let mut s = vec![[0.0; 3]; n];
    let mut dw = vec![0.0; n];
    let mut t = 0.0;
    for k in 1..n_samples {
        let t_sample = k as f64 * sde.sample_interval;
        while t < t_sample {
            let dt = sde.dt.min(t_sample - t);
            let c = ModelCoefficients::at_time(t, &model.drive, &model.cavity, model.g_c)?;
            drift(&spins, model.j, &c, &mut d);
            if sde.noise {
                let sq = dt.sqrt();
                dw.iter_mut().for_each(|w| *w = {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sq * z
                });
                diffusion(&spins, model.j, &c, &dw, &mut s);
            }
            for i in 0..n {
                let mut v = [0.0; 3];
                for a in 0..3 {
                    v[a] = spins[i][a] + d[i][a] * dt + if sde.noise { s[i][a] } else { 0.0 };
                }
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if !r.is_finite() || r == 0.0 {
                    return Err(Error::numerical(format!("spin {i} blew up at t = {t:e}")));
                }
                rec.max_renorm = rec.max_renorm.max((r / len - 1.0).abs());
                spins[i] = [v[0] * len / r, v[1] * len / r, v[2] * len / r];
            }
            t = if t_sample - (t + dt) <= 1e-12 * t_sample { t_sample } else { t + dt };
            rec.steps += 1;
        }
        push(&mut rec, t, &spins)?;
    }
    Ok(rec)
}
