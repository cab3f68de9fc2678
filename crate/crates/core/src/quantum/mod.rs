//! State-vector quantum trajectories of the atom-only model.

pub mod energy;
pub mod kernels;
pub mod lindblad;
pub mod state;
pub mod step;
pub mod trajectory;

pub use energy::{energy, energy_diagnostics, ground_state, GroundState};
pub use kernels::{apply_spin_sum, SpinTables};
pub use state::{entanglement_entropy, initial_state, PureState, SpinMarginal};
pub use step::{effective_step, EffectiveTerms, Stepper};
pub use trajectory::{
    evolve_trajectory, measurement_records, sample_jumps, JumpChannels, JumpEvent, QuantumModel, SimConfig,
    TrajectoryRecord,
};
