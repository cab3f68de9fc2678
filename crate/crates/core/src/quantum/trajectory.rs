//! Balanced-homodyne quantum-jump trajectories.
//!
//! Each collapse channel `C_k` is split into the pair `(C_k ± beta)/sqrt 2`.
//! Jumps in the `+` member raise the homodyne counter `h_k`, jumps in the `-`
//! member lower it, so `h_k` drifts at `2 beta Re<C_k>`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::energy::energy;
use super::kernels::{sigma_y_phase, SpinTables};
use super::state::{initial_state, PureState, DEFAULT_MAX_SPINS};
use super::step::{EffectiveTerms, Stepper};
use crate::cavity::CavityParams;
use crate::error::{Error, Result};
use crate::model::{DriveParams, ModelCoefficients};
use crate::seeds::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Upper bound on the step, seconds.
    pub dt_max: f64,
    /// Local-oscillator shift, sqrt(1/s).
    pub beta: f64,
    pub sample_interval: f64,
    pub t_final: f64,
    pub max_jump_prob: f64,
    pub max_spins: usize,
    pub record_energy: bool,
    /// Keep full state vectors at every sample (small `N` only).
    pub record_states: bool,
}

impl SimConfig {
    pub fn for_cavity(cavity: &CavityParams) -> Self {
        SimConfig {
            dt_max: 1e-7,
            beta: 0.1 * cavity.kappa.sqrt(),
            sample_interval: 10e-6,
            t_final: 4e-3,
            max_jump_prob: 0.1,
            max_spins: DEFAULT_MAX_SPINS,
            record_energy: false,
            record_states: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_max > 0.0
            && self.beta >= 0.0
            && self.sample_interval > 0.0
            && self.t_final > 0.0
            && self.max_jump_prob > 0.0
            && self.max_jump_prob <= 0.5
            && [self.dt_max, self.beta, self.sample_interval, self.t_final].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid simulation config: {self:?}")))
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.t_final / self.sample_interval + 1e-9).floor() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub channel: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub n: usize,
    /// Sample times, seconds.
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub entropy: Vec<Vec<f64>>,
    pub h: Vec<Vec<i64>>,
    pub s: Vec<Vec<f64>>,
    pub energy: Option<Vec<f64>>,
    pub states: Option<Vec<PureState>>,
    pub jumps: Vec<JumpEvent>,
    pub steps: u64,
}

impl TrajectoryRecord {
    pub fn final_x(&self) -> &[f64] {
        self.x.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Index of the sample nearest to `t`.
    pub fn sample_index(&self, t: f64) -> usize {
        nearest_index(&self.times, t)
    }
}

pub(crate) fn nearest_index(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// `s_i(t) = sum_k v^k_i h_k(t)` sampled at `times`.
pub fn measurement_records(jumps: &[JumpEvent], eigenvectors: &[Vec<f64>], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = eigenvectors.len();
    let mut h = vec![0i64; n];
    let mut it = jumps.iter().peekable();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while let Some(ev) = it.next_if(|ev| ev.t <= t) {
            if ev.channel >= n {
                return Err(Error::validation(format!("jump channel {} outside {n} channels", ev.channel)));
            }
            h[ev.channel] += ev.sign as i64;
        }
        out.push(records_from_counters(&h, eigenvectors));
    }
    Ok(out)
}

pub fn records_from_counters(h: &[i64], eigenvectors: &[Vec<f64>]) -> Vec<f64> {
    let n = eigenvectors.first().map_or(0, Vec::len);
    (0..n).map(|i| h.iter().zip(eigenvectors).map(|(&hk, v)| hk as f64 * v[i]).sum()).collect()
}

/// Per-step jump machinery for one set of coefficients.
pub struct JumpChannels<'a> {
    tables: &'a SpinTables,
    alpha_plus: Complex64,
    alpha_minus: Complex64,
    prefactor: Vec<f64>,
    /// Thinning bound on each member rate.
    pub bound: Vec<f64>,
    beta: f64,
}

impl<'a> JumpChannels<'a> {
    pub fn new(tables: &'a SpinTables, coeffs: &ModelCoefficients, beta: f64) -> Self {
        let prefactor: Vec<f64> = tables
            .eigenvalues
            .iter()
            .map(|&l| coeffs.g * (l * coeffs.kappa).sqrt() / (2.0 * coeffs.delta_c))
            .collect();
        let bound = prefactor
            .iter()
            .zip(&tables.eigenvectors)
            .map(|(&p, v)| {
                let half_l1 = v.iter().map(|x| x.abs()).sum::<f64>() / 2.0;
                let c = p.abs() * (coeffs.alpha_plus.norm() + coeffs.alpha_minus.norm()) * half_l1;
                (c + beta).powi(2) / 2.0
            })
            .collect();
        JumpChannels {
            tables,
            alpha_plus: coeffs.alpha_plus,
            alpha_minus: coeffs.alpha_minus,
            prefactor,
            bound,
            beta,
        }
    }

    /// Sum of the bounds over all `2N` members.
    pub fn total_bound(&self) -> f64 {
        2.0 * self.bound.iter().sum::<f64>()
    }

    /// `C_k |psi>` into `out`.
    pub fn apply(&self, k: usize, psi: &[Complex64], out: &mut [Complex64]) {
        let p = self.prefactor[k];
        let ax = self.alpha_plus * p;
        let c = &self.tables.channel[k];
        for ((o, a), ck) in out.iter_mut().zip(psi).zip(c) {
            *o = a * (ax * ck);
        }
        if self.alpha_minus != Complex64::new(0.0, 0.0) {
            let v = &self.tables.eigenvectors[k];
            let ay = Complex64::new(0.0, 1.0) * self.alpha_minus * p * 0.5;
            for (b, o) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, vi) in v.iter().enumerate() {
                    acc += sigma_y_phase(b, i) * psi[b ^ (1 << i)] * *vi;
                }
                *o += ay * acc;
            }
        }
    }

    /// Exact rates `(r_+, r_-)` of the two members of channel `k`.
    pub fn rates(&self, k: usize, psi: &[Complex64], scratch: &mut [Complex64]) -> (f64, f64) {
        self.apply(k, psi, scratch);
        let cc: f64 = scratch.iter().map(|a| a.norm_sqr()).sum();
        let mean: Complex64 = psi.iter().zip(scratch.iter()).map(|(a, b)| a.conj() * b).sum();
        let base = cc + self.beta * self.beta;
        let cross = 2.0 * self.beta * mean.re;
        (((base + cross) / 2.0).max(0.0), ((base - cross) / 2.0).max(0.0))
    }

    /// Replace `psi` by the normalized `(C_k + sign beta) psi`.
    pub fn jump(&self, k: usize, sign: i8, state: &mut PureState, scratch: &mut [Complex64]) -> Result<()> {
        self.apply(k, &state.amps, scratch);
        let shift = self.beta * sign as f64;
        state.amps.iter_mut().zip(scratch.iter()).for_each(|(a, c)| *a = c + *a * shift);
        state.normalize().map(|_| ())
    }
}

/// Bernoulli jump sampling with exact thinning against the channel bounds.
///
/// All candidate rates are evaluated on the incoming state; accepted jumps
/// are then applied in channel order.
pub fn sample_jumps<R: Rng>(
    state: &mut PureState,
    channels: &JumpChannels<'_>,
    dt: f64,
    max_jump_prob: f64,
    rng: &mut R,
    scratch: &mut Vec<Complex64>,
) -> Result<Vec<(usize, i8)>> {
    let total = channels.total_bound() * dt;
    if total > max_jump_prob * (1.0 + 1e-9) {
        return Err(Error::numerical(format!(
            "jump probability per step {total:.3} exceeds {max_jump_prob}; use dt <= {:e}",
            max_jump_prob / channels.total_bound()
        )));
    }
    scratch.resize(state.dim(), Complex64::new(0.0, 0.0));
    let mut accepted = Vec::new();
    for k in 0..channels.bound.len() {
        let p = channels.bound[k] * dt;
        let cand_plus = rng.random::<f64>() < p;
        let cand_minus = rng.random::<f64>() < p;
        if !(cand_plus || cand_minus) {
            continue;
        }
        let (rp, rm) = channels.rates(k, &state.amps, scratch);
        let b = channels.bound[k];
        if cand_plus && rng.random::<f64>() * b < rp {
            accepted.push((k, 1));
        }
        if cand_minus && rng.random::<f64>() * b < rm {
            accepted.push((k, -1));
        }
    }
    for &(k, sign) in &accepted {
        channels.jump(k, sign, state, scratch)?;
    }
    Ok(accepted)
}

/// Read-only model data shared by every trajectory of one `J`.
#[derive(Debug, Clone, Copy)]
pub struct QuantumModel<'a> {
    pub tables: &'a SpinTables,
    pub cavity: CavityParams,
    pub drive: DriveParams,
    pub g_c: f64,
}

impl QuantumModel<'_> {
    pub fn coefficients(&self, t: f64) -> Result<ModelCoefficients> {
        ModelCoefficients::at_time(t, &self.drive, &self.cavity, self.g_c)
    }
}

struct Recorder {
    rec: TrajectoryRecord,
}

impl Recorder {
    fn push(&mut self, t: f64, state: &PureState, h: &[i64], model: &QuantumModel<'_>) -> Result<()> {
        let m = state.marginals();
        let r = &mut self.rec;
        r.times.push(t);
        r.x.push(m.iter().map(|s| s.x).collect());
        r.y.push(m.iter().map(|s| s.y).collect());
        r.z.push(m.iter().map(|s| s.z).collect());
        r.entropy.push(m.iter().map(|s| s.entropy).collect());
        r.h.push(h.to_vec());
        r.s.push(records_from_counters(h, &model.tables.eigenvectors));
        if let Some(e) = r.energy.as_mut() {
            e.push(energy(state, model.tables, &model.coefficients(t)?));
        }
        if let Some(s) = r.states.as_mut() {
            s.push(state.clone());
        }
        Ok(())
    }
}

/// Run one trajectory from the all-down state to `sim.t_final`.
pub fn evolve_trajectory(model: &QuantumModel<'_>, sim: &SimConfig, seed: u64) -> Result<TrajectoryRecord> {
    sim.validate()?;
    let n = model.tables.n;
    let mut state = initial_state(n, sim.max_spins)?;
    let mut rng = rng_from_seed(seed);
    let mut h = vec![0i64; n];
    let mut rec = Recorder {
        rec: TrajectoryRecord {
            seed,
            n,
            times: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            z: Vec::new(),
            entropy: Vec::new(),
            h: Vec::new(),
            s: Vec::new(),
            energy: sim.record_energy.then(Vec::new),
            states: sim.record_states.then(Vec::new),
            jumps: Vec::new(),
            steps: 0,
        },
    };
    rec.push(0.0, &state, &h, model)?;

    let n_samples = sim.n_samples();
    let mut stepper = Stepper::new();
    let mut scratch = Vec::new();
    let mut t = 0.0;
    let mut cached: Option<(ModelCoefficients, EffectiveTerms)> = None;
    for k in 1..n_samples {
        let t_sample = k as f64 * sim.sample_interval;
        while t < t_sample {
            let coeffs = model.coefficients(t)?;
            if cached.as_ref().is_none_or(|(c, _)| *c != coeffs) {
                cached = Some((coeffs, EffectiveTerms::new(model.tables, &coeffs)));
            }
            let terms = &cached.as_ref().expect("just set").1;
            let channels = JumpChannels::new(model.tables, &coeffs, sim.beta);
            let total = channels.total_bound();
            let mut dt = sim.dt_max.min(t_sample - t);
            if total > 0.0 {
                dt = dt.min(sim.max_jump_prob / total);
            }
            stepper.step(&mut state, model.tables, terms, dt)?;
            let jumps = sample_jumps(&mut state, &channels, dt, sim.max_jump_prob, &mut rng, &mut scratch)?;
            t = if t_sample - (t + dt) <= 1e-12 * t_sample { t_sample } else { t + dt };
            for (ch, sign) in jumps {
                h[ch] += sign as i64;
                rec.rec.jumps.push(JumpEvent { t, channel: ch, sign });
            }
            rec.rec.steps += 1;
        }
        rec.push(t, &state, &h, model)?;
    }
    Ok(rec.rec)
}
