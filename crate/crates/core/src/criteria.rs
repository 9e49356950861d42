//! Closed-form sweep design rules.

use crate::constants::{H, MU_B};
use crate::error::{Error, Result};
use crate::field::{DipoleTrapConfig, QuadrupoleFieldConfig};
use crate::species::SpeciesParams;
use std::f64::consts::PI;

/// Upper sweep frequency needed to reach atoms one Rayleigh length from the
/// field zero: g_J μ_B B' z_R / h, Hz.
pub fn nu_max_estimate(
    quad: &QuadrupoleFieldConfig,
    trap: &DipoleTrapConfig,
    sp: &SpeciesParams,
) -> f64 {
    sp.g_j * MU_B * quad.gradient_axial * trap.rayleigh_length / H
}

/// Smallest Rabi angular frequency satisfying (Ω/2π)² ≥ α Δν / t_S, rad/s.
pub fn min_rabi_for_adiabatic(delta_nu: f64, t_s: f64, alpha: f64) -> Result<f64> {
    if !(delta_nu > 0.0 && t_s > 0.0 && alpha > 0.0) {
        return Err(Error::domain(format!(
            "adiabatic threshold needs positive inputs (delta_nu = {delta_nu}, t_s = {t_s}, alpha = {alpha})"
        )));
    }
    Ok(2.0 * PI * (alpha * delta_nu / t_s).sqrt())
}

/// α implied by a threshold Rabi frequency: (Ω/2π)² t_S / Δν.
pub fn alpha_from_threshold(omega: f64, delta_nu: f64, t_s: f64) -> f64 {
    (omega / (2.0 * PI)).powi(2) * t_s / delta_nu
}
