//! Simulation library for RF-swept time-averaged magnetic traps.
//!
//! Fast linear RF frequency sweeps flip the Zeeman sublevel of atoms held in a
//! magnetic quadrupole plus optical dipole trap. When every atom is flipped
//! adiabatically at a rate faster than its motion, the magnetic force averages
//! out and the atoms see the bare optical potential.
//!
//! The crate is organised by layer:
//!
//! - [`constants`], [`units`], [`species`], [`field`], [`sweep`], [`criteria`]:
//!   physical constants, field geometry and the closed-form sweep design rules.
//! - [`ode`]: an adaptive Dormand–Prince integrator, used for the
//!   rate equations.
//! - [`quantum`]: spin-J propagation in swept RF fields, Landau–Zener analytics
//!   and the calibration of the adiabaticity constant.
//! - [`trajectory`]: semiclassical Monte Carlo of atoms carrying a Zeeman label.
//! - [`loading`]: trap-loading rate equations and thermal halo estimates.

pub mod constants;
pub mod criteria;
pub mod error;
pub mod field;
pub mod loading;
pub mod ode;
pub mod quantum;
pub mod species;
pub mod sweep;
pub mod trajectory;
pub mod units;

pub use error::{Error, Result};

/// Cartesian vector used for positions, velocities, fields and forces.
pub type Vec3 = nalgebra::Vector3<f64>;
