//! CODATA 2018 values of the constants used throughout the crate (SI units).

use std::f64::consts::PI;

/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Planck constant, J s (exact).
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = H / (2.0 * PI);
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light, m/s (exact).
pub const C: f64 = 299_792_458.0;

/// Bundle of the constants, for callers that want to carry them around as a
/// value (e.g. to echo them into run manifests).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub mu_b: f64,
    pub hbar: f64,
    pub h: f64,
    pub k_b: f64,
    pub amu: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        mu_b: MU_B,
        hbar: HBAR,
        h: H,
        k_b: K_B,
        amu: AMU,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}
