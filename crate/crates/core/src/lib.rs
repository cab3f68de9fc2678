//! Driven-dissipative spin-glass simulation in a multimode confocal cavity.
//!
//! Disordered spin positions define a coupling matrix through the cavity
//! Green's function. The spins are then evolved either as quantum
//! trajectories (one atom per node) or as a semiclassical stochastic system
//! (large atomic ensembles), and the resulting replica ensembles are analysed
//! with overlap distributions, clustering, equilibrium fits and
//! ultrametricity tests.

pub mod cavity;
pub mod config;
pub mod error;
pub mod io;
pub mod landscape;
pub mod model;
pub mod pipeline;
pub mod quantum;
pub mod rsb;
pub mod seeds;
pub mod semiclassical;

pub use cavity::{build_coupling_matrix, sample_positions, CavityParams, CouplingMatrix, Regime, SpinLayout};
pub use config::{Engine, ExperimentConfig};
pub use error::{Error, Result};
pub use landscape::{enumerate_local_minima, Encoding, LocalMinimum};
pub use model::{critical_coupling, DriveParams, ModelCoefficients};
pub use quantum::{evolve_trajectory, QuantumModel, SimConfig, TrajectoryRecord};
pub use rsb::{Histogram, OverlapMatrix, ReplicaSet};
pub use semiclassical::{integrate_semiclassical, ClassicalModel, ClassicalRecord, SdeConfig};
