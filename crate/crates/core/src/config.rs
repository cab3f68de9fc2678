//! Experiment configuration file.
//!
//! Frequencies are written in plain Hz and times in microseconds or
//! nanoseconds as the field names say; conversion to rad/s and seconds
//! happens once, in the accessor methods.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::cavity::{CavityParams, Regime};
use crate::error::{Error, Result};
use crate::model::DriveParams;
use crate::quantum::SimConfig;
use crate::semiclassical::SdeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Quantum,
    Semiclassical,
    Both,
}

impl Engine {
    pub fn quantum(self) -> bool {
        matches!(self, Engine::Quantum | Engine::Both)
    }

    pub fn semiclassical(self) -> bool {
        matches!(self, Engine::Semiclassical | Engine::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    pub w0_um: f64,
    pub alpha: f64,
    pub kappa_hz: f64,
    pub delta_c_hz: f64,
    pub n_modes_oracle: usize,
}

impl Default for CavitySection {
    fn default() -> Self {
        CavitySection { w0_um: 35.0, alpha: 0.02, kappa_hz: 260e3, delta_c_hz: -80e6, n_modes_oracle: 80 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    pub g_final_sq_over_gc_sq: f64,
    pub omega_z0_hz: f64,
    pub ramp_start_us: f64,
    pub ramp_end_us: f64,
    pub quench: bool,
}

impl Default for DriveSection {
    fn default() -> Self {
        DriveSection {
            g_final_sq_over_gc_sq: 5.0,
            omega_z0_hz: 10e3,
            ramp_start_us: 100.0,
            ramp_end_us: 700.0,
            quench: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt_max_ns: f64,
    /// `beta / sqrt(kappa)`.
    pub beta_over_sqrt_kappa: f64,
    pub sample_interval_us: f64,
    pub t_final_us: f64,
    pub max_jump_prob: f64,
    pub max_spins: usize,
    pub record_energy: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt_max_ns: 100.0,
            beta_over_sqrt_kappa: 0.1,
            sample_interval_us: 10.0,
            t_final_us: 4000.0,
            max_jump_prob: 0.1,
            max_spins: crate::quantum::state::DEFAULT_MAX_SPINS,
            record_energy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiclassicalSection {
    pub dt_ns: f64,
    pub noise: bool,
    pub tilt: bool,
}

impl Default for SemiclassicalSection {
    fn default() -> Self {
        SemiclassicalSection { dt_ns: 1.0, noise: true, tilt: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_j: usize,
    pub n_trajectories: usize,
    pub regime: Regime,
    pub n_spins: usize,
    /// Atoms per node `M`; the quantum engine always simulates `M = 1`.
    pub ensemble_size: u64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { n_j: 100, n_trajectories: 200, regime: Regime::SpinGlass, n_spins: 15, ensemble_size: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub steady_time_us: f64,
    pub bootstrap_samples: usize,
    /// Hamming cutoff when mapping steady states onto local minima.
    pub minima_cutoff: u32,
    /// Snapshot times for the overlap-distribution sequence.
    pub snapshot_times_us: Vec<f64>,
    /// Random starts for the product-state energy floor.
    pub floor_samples: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            steady_time_us: 4000.0,
            bootstrap_samples: 100,
            minima_cutoff: 1,
            snapshot_times_us: vec![0.0, 500.0, 1000.0, 2000.0, 4000.0],
            floor_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cavity: CavitySection,
    pub drive: DriveSection,
    pub sim: SimSection,
    pub semiclassical: SemiclassicalSection,
    pub ensemble: EnsembleSection,
    pub analysis: AnalysisSection,
    pub master_seed: u64,
    pub output_root: Option<PathBuf>,
    pub engine: Engine,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            cavity: CavitySection::default(),
            drive: DriveSection::default(),
            sim: SimSection::default(),
            semiclassical: SemiclassicalSection::default(),
            ensemble: EnsembleSection::default(),
            analysis: AnalysisSection::default(),
            master_seed: 0,
            output_root: None,
            engine: Engine::Quantum,
        }
    }
}

fn hz(v: f64) -> f64 {
    2.0 * PI * v
}

impl ExperimentConfig {
    /// Parse JSON, reporting schema violations with their path.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn cavity_params(&self) -> CavityParams {
        let c = &self.cavity;
        CavityParams {
            w0_um: c.w0_um,
            alpha: c.alpha,
            kappa: hz(c.kappa_hz),
            delta_c: hz(c.delta_c_hz),
            n_modes_oracle: c.n_modes_oracle,
        }
    }

    pub fn drive_params(&self) -> DriveParams {
        let d = &self.drive;
        DriveParams {
            g_final_sq_over_gc_sq: d.g_final_sq_over_gc_sq,
            omega_z0: hz(d.omega_z0_hz),
            ramp_start: d.ramp_start_us * 1e-6,
            ramp_end: d.ramp_end_us * 1e-6,
            quench: d.quench,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.sim;
        SimConfig {
            dt_max: s.dt_max_ns * 1e-9,
            beta: s.beta_over_sqrt_kappa * self.cavity_params().kappa.sqrt(),
            sample_interval: s.sample_interval_us * 1e-6,
            t_final: s.t_final_us * 1e-6,
            max_jump_prob: s.max_jump_prob,
            max_spins: s.max_spins,
            record_energy: s.record_energy,
            record_states: false,
        }
    }

    pub fn sde_config(&self) -> SdeConfig {
        SdeConfig {
            dt: self.semiclassical.dt_ns * 1e-9,
            t_final: self.sim.t_final_us * 1e-6,
            sample_interval: self.sim.sample_interval_us * 1e-6,
            noise: self.semiclassical.noise,
            tilt: self.semiclassical.tilt,
            record_energy: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity_params().validate()?;
        self.drive_params().validate()?;
        self.sim_config().validate()?;
        self.sde_config().validate()?;
        let e = &self.ensemble;
        if e.n_j < 1 {
            return Err(Error::validation("ensemble.n_j must be at least 1"));
        }
        if e.n_trajectories < 2 {
            return Err(Error::validation("ensemble.n_trajectories must be at least 2 for overlap analyses"));
        }
        if e.n_spins < 1 || (self.engine.quantum() && e.n_spins > self.sim.max_spins) {
            return Err(Error::validation(format!(
                "ensemble.n_spins = {} outside 1..={}",
                e.n_spins, self.sim.max_spins
            )));
        }
        if e.ensemble_size < 1 {
            return Err(Error::validation("ensemble.ensemble_size must be at least 1"));
        }
        if self.analysis.snapshot_times_us.iter().any(|t| !(*t >= 0.0)) || !(self.analysis.steady_time_us >= 0.0) {
            return Err(Error::validation("analysis times must be nonnegative"));
        }
        if self.analysis.floor_samples < 1 {
            return Err(Error::validation("analysis.floor_samples must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
