use super::hamiltonian::{HamiltonianSpec, RfEnvelope};
use super::propagate::{propagate, DEFAULT_TOLERANCE};
use super::spin::SpinState;
use crate::criteria::alpha_from_threshold;
use crate::error::{Error, Result};
use crate::field::{resonance_frequency, rf_amplitude_for_rabi};
use crate::species::SpeciesParams;
use crate::sweep::{RfSweepConfig, SweepShape};
use crate::Vec3;
use nalgebra::{Rotation3, Unit};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    /// Final populations in the local field basis, ordered m = −J … +J.
    pub populations: Vec<f64>,
    /// Population in m = −m0.
    pub transfer_efficiency: f64,
    /// Local resonance g_J μ_B |B| / h, Hz.
    pub resonance_frequency: f64,
    /// False when the resonance lies outside (ν_min, ν_max); the result is
    /// still the measured one.
    pub resonance_in_band: bool,
    pub norm_drift: f64,
}

fn rotation_to_z(b: &Vec3) -> Rotation3<f64> {
    let z = Vec3::z();
    Rotation3::rotation_between(b, &z)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::x()), PI))
}

/// Propagate one sweep period from |m0⟩ (quantized along `b_local`) and
/// return the final populations in the same basis.
pub fn sweep_transfer(b_local: &Vec3, spec: &HamiltonianSpec, m0: f64) -> Result<TransferResult> {
    sweep_transfer_tol(b_local, spec, m0, DEFAULT_TOLERANCE)
}

pub fn sweep_transfer_tol(
    b_local: &Vec3,
    spec: &HamiltonianSpec,
    m0: f64,
    tol: f64,
) -> Result<TransferResult> {
    spec.validate()?;
    let b = b_local.norm();
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::domain("local field must be nonzero and finite"));
    }
    let two_j = spec.species.two_j();
    let target = SpinState::index_of(two_j, -m0)?;
    let psi0 = SpinState::basis(two_j, m0)?;
    let rot = rotation_to_z(b_local);
    let mut aligned = spec.clone();
    aligned.static_b = Vec3::new(0.0, 0.0, b);
    aligned.sweep.polarization_axis = rot * spec.sweep.polarization_axis;
    let out = propagate(&aligned, &psi0, 0.0, spec.sweep.period(), tol)?;
    let populations = out.state.populations();
    let nu = resonance_frequency(b, &spec.species);
    Ok(TransferResult {
        transfer_efficiency: populations[target],
        populations,
        resonance_frequency: nu,
        resonance_in_band: nu > spec.sweep.nu_min && nu < spec.sweep.nu_max,
        norm_drift: out.norm_drift,
    })
}

/// Closed-form α for a linearly polarized RF whose component perpendicular
/// to the static field is the fraction `p_perp` of its amplitude.
///
/// In the rotating frame the coupling is (Ω p⊥/2) J_x, the two-level
/// diabatic probability is q = exp(−π² p⊥² α/4), and the full spin-J
/// transfer from +J to −J is (1 − q)^(2J).
pub fn alpha_lz_analytic(two_j: u32, threshold: f64, p_perp: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) || !(p_perp > 0.0 && p_perp <= 1.0) || two_j == 0 {
        return Err(Error::domain("need 0 < threshold < 1, 0 < p_perp <= 1 and J > 0"));
    }
    let q = 1.0 - threshold.powf(1.0 / f64::from(two_j));
    Ok(-4.0 * q.ln() / (PI * PI * p_perp * p_perp))
}

/// Δν ∈ {2, 6.5, 10} MHz × t_S ∈ {50, 100, 200} μs.
pub fn default_calibration_grid() -> Vec<(f64, f64)> {
    let mut g = Vec::new();
    for dnu in [2e6, 6.5e6, 10e6] {
        for ts in [50e-6, 100e-6, 200e-6] {
            g.push((dnu, ts));
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Unit RF polarization; the static field points along ẑ.
    pub polarization_axis: Vec3,
    pub shape: SweepShape,
    pub envelope: RfEnvelope,
    pub tolerance: f64,
    /// Bisection stops when Ω_hi/Ω_lo − 1 falls below this.
    pub relative_precision: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            polarization_axis: Vec3::x(),
            shape: SweepShape::LinearUp,
            envelope: RfEnvelope::EdgeRamped { fraction: 0.1 },
            tolerance: 1e-8,
            relative_precision: 2e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaPoint {
    pub delta_nu: f64,
    pub t_s: f64,
    /// Smallest lab-frame Rabi frequency reaching the threshold, rad/s.
    pub omega_threshold: f64,
    pub alpha: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCalibration {
    /// Median α over the grid.
    pub alpha: f64,
    /// max α / min α over the grid.
    pub spread: f64,
    pub points: Vec<AlphaPoint>,
}

fn grid_point_spec(
    sp: &SpeciesParams,
    nu0: f64,
    delta_nu: f64,
    t_s: f64,
    opts: &CalibrationOptions,
) -> std::result::Result<HamiltonianSpec, String> {
    if !(delta_nu > 0.0 && t_s > 0.0) {
        return Err("sweep span and period must be positive".into());
    }
    if nu0 <= 0.5 * delta_nu {
        return Err(format!(
            "a band of width {delta_nu:e} Hz centred on the resonance {nu0:e} Hz reaches zero frequency"
        ));
    }
    let sweep = RfSweepConfig {
        nu_min: nu0 - 0.5 * delta_nu,
        nu_max: nu0 + 0.5 * delta_nu,
        sweep_rate: 1.0 / t_s,
        shape: opts.shape,
        b_rf: 0.0,
        polarization_axis: opts.polarization_axis,
        phase_reset_seed: None,
    };
    let mut spec = HamiltonianSpec::new(*sp, Vec3::zeros(), sweep);
    spec.envelope = opts.envelope;
    Ok(spec)
}

fn efficiency_at(spec: &HamiltonianSpec, b: f64, omega: f64, tol: f64) -> Result<f64> {
    let mut s = spec.clone();
    s.sweep.b_rf = rf_amplitude_for_rabi(omega, &s.species);
    let j = s.species.j;
    Ok(sweep_transfer_tol(&Vec3::new(0.0, 0.0, b), &s, j, tol)?.transfer_efficiency)
}

fn calibrate_point(
    sp: &SpeciesParams,
    b: f64,
    delta_nu: f64,
    t_s: f64,
    threshold: f64,
    opts: &CalibrationOptions,
) -> Result<AlphaPoint> {
    let fail = |reason: String| Error::Calibration {
        delta_nu,
        t_s,
        reason,
    };
    let nu0 = resonance_frequency(b, sp);
    let spec = grid_point_spec(sp, nu0, delta_nu, t_s, opts).map_err(fail)?;
    let p_perp = opts.polarization_axis.cross(&Vec3::z()).norm().max(1e-3);
    let guess_alpha = alpha_lz_analytic(sp.two_j(), threshold, p_perp).map_err(|e| fail(e.to_string()))?;
    let guess = 2.0 * PI * (guess_alpha * delta_nu / t_s).sqrt();
    let eff = |omega: f64| efficiency_at(&spec, b, omega, opts.tolerance);

    let mut lo = 0.5 * guess;
    let mut hi = 1.5 * guess;
    let mut tries = 0;
    while eff(lo)? >= threshold {
        tries += 1;
        if tries > 6 {
            return Err(fail(format!("threshold already met at Omega = {lo:e} rad/s")));
        }
        hi = lo;
        lo *= 0.5;
    }
    tries = 0;
    let mut e_hi = eff(hi)?;
    while e_hi < threshold {
        tries += 1;
        if tries > 6 {
            return Err(fail(format!(
                "threshold {threshold} not reached up to Omega = {hi:e} rad/s (efficiency {e_hi})"
            )));
        }
        lo = hi;
        hi *= 1.5;
        e_hi = eff(hi)?;
    }
    while hi / lo - 1.0 > opts.relative_precision {
        let mid = (lo * hi).sqrt();
        let e = eff(mid)?;
        if e >= threshold {
            hi = mid;
            e_hi = e;
        } else {
            lo = mid;
        }
    }
    Ok(AlphaPoint {
        delta_nu,
        t_s,
        omega_threshold: hi,
        alpha: alpha_from_threshold(hi, delta_nu, t_s),
        efficiency: e_hi,
    })
}

/// For each (Δν, t_S) grid point, find the smallest Rabi frequency whose
/// single sweep through the resonance of `b_local` transfers +J to −J with
/// at least `threshold` probability, and convert it to α = (Ω/2π)² t_S/Δν.
///
/// The band of each grid point is centred on the local resonance.
pub fn calibrate_alpha(
    sp: &SpeciesParams,
    b_local: f64,
    sweep_grid: &[(f64, f64)],
    threshold: f64,
    opts: &CalibrationOptions,
) -> Result<AlphaCalibration> {
    sp.validate()?;
    if sweep_grid.is_empty() {
        return Err(Error::domain("calibration grid is empty"));
    }
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(Error::domain(format!("threshold {threshold} outside (0.5, 1)")));
    }
    if !(b_local > 0.0 && b_local.is_finite()) {
        return Err(Error::domain("local field must be positive"));
    }
    let points = sweep_grid
        .par_iter()
        .map(|&(dnu, ts)| calibrate_point(sp, b_local, dnu, ts, threshold, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut alphas: Vec<f64> = points.iter().map(|p| p.alpha).collect();
    alphas.sort_by(|a, b| a.total_cmp(b));
    let n = alphas.len();
    let alpha = if n % 2 == 1 {
        alphas[n / 2]
    } else {
        0.5 * (alphas[n / 2 - 1] + alphas[n / 2])
    };
    Ok(AlphaCalibration {
        alpha,
        spread: alphas[n - 1] / alphas[0],
        points,
    })
}
