//! Static field geometry: the magnetic quadrupole, the Gaussian-beam dipole
//! trap, and the linear Zeeman and RF couplings.
//!
//! Axis convention: `x` is the long axis of the dipole trap (the beam
//! propagation direction), and the quoted quadrupole gradient is the gradient
//! of |B| along `x`. The quadrupole field is `B = B'·(x, -y/2, -z/2)`, which is
//! divergence free.

use crate::constants::{C, EPSILON_0, H, HBAR, MU_B};
use crate::error::{Error, Result};
use crate::species::SpeciesParams;
use crate::Vec3;
use std::f64::consts::PI;

/// Default radius around the field zero inside which ∇|B| is set to zero.
pub const DEFAULT_REGULARIZATION_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupoleFieldConfig {
    /// Gradient of |B| along the long (x) axis, T/m.
    pub gradient_axial: f64,
    /// Position of the field zero, m.
    pub center: Vec3,
    /// Radius around the zero where the magnitude gradient is regularized, m.
    pub regularization_radius: f64,
}

impl Default for QuadrupoleFieldConfig {
    fn default() -> Self {
        QuadrupoleFieldConfig {
            gradient_axial: 0.09,
            center: Vec3::zeros(),
            regularization_radius: DEFAULT_REGULARIZATION_RADIUS,
        }
    }
}

impl QuadrupoleFieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_axial > 0.0 && self.gradient_axial.is_finite()) {
            return Err(Error::config("quadrupole gradient must be positive"));
        }
        if !(self.regularization_radius >= 0.0) {
            return Err(Error::config("regularization radius must be non-negative"));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::config("quadrupole center must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupoleSample {
    pub field: Vec3,
    pub magnitude: f64,
    /// ∇|B|, T/m. Zero inside the regularization radius.
    pub grad_magnitude: Vec3,
    /// True when the point lies inside the regularization radius.
    pub regularized: bool,
}

pub fn quadrupole_field(r: &Vec3, cfg: &QuadrupoleFieldConfig) -> QuadrupoleSample {
    let d = r - cfg.center;
    let b1 = cfg.gradient_axial;
    let field = Vec3::new(b1 * d.x, -0.5 * b1 * d.y, -0.5 * b1 * d.z);
    let magnitude = field.norm();
    let regularized = d.norm() < cfg.regularization_radius || magnitude == 0.0;
    let grad_magnitude = if regularized {
        Vec3::zeros()
    } else {
        // ∇|B| = Jᵀ B / |B| with the diagonal Jacobian B'·diag(1, -1/2, -1/2)
        Vec3::new(b1 * field.x, -0.5 * b1 * field.y, -0.5 * b1 * field.z) / magnitude
    };
    QuadrupoleSample {
        field,
        magnitude,
        grad_magnitude,
        regularized,
    }
}

/// Far-detuned Gaussian-beam trap propagating along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleTrapConfig {
    /// Beam power, W (informational unless used with [`trap_depth_from_polarizability`]).
    pub power: f64,
    /// 1/e² intensity radius at the focus, m.
    pub waist: f64,
    pub wavelength: f64,
    /// Rayleigh length, m.
    pub rayleigh_length: f64,
    /// Single-pass depth U₀, J.
    pub trap_depth: f64,
    /// Retro-reflection doubles the depth; the standing wave is ignored.
    pub retro_reflected: bool,
    /// Focus position, m.
    pub focus: Vec3,
}

impl Default for DipoleTrapConfig {
    fn default() -> Self {
        DipoleTrapConfig {
            power: 35.0,
            waist: 42e-6,
            wavelength: 1075e-9,
            rayleigh_length: 2.5e-3,
            trap_depth: 300e-6 * crate::constants::K_B,
            retro_reflected: true,
            focus: Vec3::zeros(),
        }
    }
}

/// Diffraction-limited Rayleigh length π w₀² / λ.
pub fn gaussian_rayleigh_length(waist: f64, wavelength: f64) -> f64 {
    PI * waist * waist / wavelength
}

/// Single-pass depth α I₀ / (2 ε₀ c) for a static polarizability `alpha` (SI,
/// C m² / V) and peak intensity I₀ = 2P / (π w₀²).
pub fn trap_depth_from_polarizability(power: f64, waist: f64, alpha: f64) -> f64 {
    let peak_intensity = 2.0 * power / (PI * waist * waist);
    alpha * peak_intensity / (2.0 * EPSILON_0 * C)
}

impl DipoleTrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0) {
            return Err(Error::config("dipole waist must be positive"));
        }
        if !(self.rayleigh_length > 0.0) {
            return Err(Error::config("Rayleigh length must be positive"));
        }
        if !(self.trap_depth >= 0.0 && self.trap_depth.is_finite()) {
            return Err(Error::config("trap depth must be non-negative"));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::config("wavelength must be positive"));
        }
        Ok(())
    }

    /// Depth seen by the atoms, including the retro-reflection factor.
    pub fn effective_depth(&self) -> f64 {
        if self.retro_reflected {
            2.0 * self.trap_depth
        } else {
            self.trap_depth
        }
    }

    /// Harmonic trap angular frequencies (axial, radial) for mass `mass`.
    pub fn harmonic_frequencies(&self, mass: f64) -> (f64, f64) {
        let u = self.effective_depth();
        let axial = (2.0 * u / (mass * self.rayleigh_length.powi(2))).sqrt();
        let radial = (4.0 * u / (mass * self.waist.powi(2))).sqrt();
        (axial, radial)
    }
}

/// Dipole potential (J) and force (N) at `r`.
pub fn dipole_potential_and_force(r: &Vec3, cfg: &DipoleTrapConfig) -> (f64, Vec3) {
    let d = r - cfg.focus;
    let zr2 = cfg.rayleigh_length * cfg.rayleigh_length;
    let w02 = cfg.waist * cfg.waist;
    // a = (w₀ / w(x))²
    let a = 1.0 / (1.0 + d.x * d.x / zr2);
    let rho2 = d.y * d.y + d.z * d.z;
    let u = -cfg.effective_depth() * a * (-2.0 * rho2 * a / w02).exp();
    let radial = 4.0 * a / w02 * u;
    let fx = u * 2.0 * d.x * a / zr2 * (1.0 - 2.0 * rho2 * a / w02);
    (u, Vec3::new(fx, radial * d.y, radial * d.z))
}

/// Linear Zeeman energy m g_J μ_B |B|, J.
pub fn zeeman_energy(m: i32, b_mag: f64, sp: &SpeciesParams) -> Result<f64> {
    if f64::from(m.abs()) > sp.j {
        return Err(Error::domain(format!("m = {m} outside [-J, J] for J = {}", sp.j)));
    }
    Ok(f64::from(m) * sp.g_j * MU_B * b_mag)
}

/// RF Rabi angular frequency g_J μ_B B_rf / ħ, rad/s.
pub fn rabi_frequency(b_rf: f64, sp: &SpeciesParams) -> Result<f64> {
    if !(b_rf >= 0.0) {
        return Err(Error::domain(format!("RF amplitude {b_rf} T must be non-negative")));
    }
    Ok(sp.g_j * MU_B * b_rf / HBAR)
}

/// Inverse of [`rabi_frequency`]: RF amplitude (T) giving Rabi frequency `omega`.
pub fn rf_amplitude_for_rabi(omega: f64, sp: &SpeciesParams) -> f64 {
    omega * HBAR / (sp.g_j * MU_B)
}

/// Resonance frequency g_J μ_B |B| / h of the Δm = ±1 transition, Hz.
pub fn resonance_frequency(b_mag: f64, sp: &SpeciesParams) -> f64 {
    sp.g_j * MU_B * b_mag / H
}

/// Field magnitude (T) whose Δm = ±1 resonance is `nu`.
pub fn field_for_resonance(nu: f64, sp: &SpeciesParams) -> f64 {
    nu * H / (sp.g_j * MU_B)
}
