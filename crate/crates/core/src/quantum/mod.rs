//! Spin-J quantum dynamics in swept RF plus static magnetic fields.
//!
//! The propagator integrates the full lab-frame Zeeman Hamiltonian, including
//! the counter-rotating part of the linearly polarized RF. The rotating-wave
//! approximation only appears in [`dressed_energies`] and in the analytic
//! Landau–Zener formulas.

mod dressed;
mod hamiltonian;
mod lz;
mod propagate;
mod spin;
mod transfer;

pub use dressed::dressed_energies;
pub use hamiltonian::{
    build_hamiltonian, HamiltonianSpec, RfEnvelope, RotatingFrameSweep, TimeDependentHamiltonian,
};
pub use lz::{
    binomial_populations, fit_binomial_q, lz_tdse_populations, lz_tdse_survival, lz_transition_probabilities,
    lz_two_level, wigner_small_d,
};
pub use propagate::{
    propagate, propagate_hamiltonian, PropagationResult, DEFAULT_TOLERANCE,
};
pub use spin::{angular_momentum_matrices, SpinLadder, SpinMatrices, SpinState, C64};
pub use transfer::{
    alpha_lz_analytic, calibrate_alpha, default_calibration_grid, sweep_transfer,
    sweep_transfer_tol, AlphaCalibration, AlphaPoint, CalibrationOptions, TransferResult,
};
