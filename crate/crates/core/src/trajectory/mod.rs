//! Semiclassical Monte Carlo of atoms with a Zeeman label moving in the
//! quadrupole plus dipole potentials.
//!
//! Each atom carries a classical position and velocity and an integer
//! sublevel m. Between resonance crossings it moves under
//! −∇(m g_J μ_B |B|) plus the dipole force. At a crossing of the swept RF
//! with its local resonance the sublevel changes instantaneously, either by a
//! full flip m → −m or by a draw from the spin-J Landau–Zener distribution.

mod atom;
mod ensemble;
mod flips;
mod rng;
mod simulate;

pub use atom::{
    force_on_atom, local_resonance, magnetic_force_per_m, potential_energy, step, Atom, AtomFlags,
    Traps,
};
pub use ensemble::{sample_ensemble, EnsembleConfig, InitialDistribution, MPolicy};
pub use flips::{
    apply_flip, local_detuning_rate, polarization_factor, resonance_crossings, time_averaged_force,
    AveragedForce, FlipMode, FlipModel,
};
pub use rng::{atom_stream, Stream};
pub use simulate::{
    default_timestep, retention_scan, simulate, LossCause, LossRecord, ScanAxis, ScanPoint,
    SimulationConfig, SimulationResult, TrajectorySample,
};
