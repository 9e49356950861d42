//! Trap-loading rate equation and the closed-form thermal estimates for the
//! magnetic halo of a trapped cloud.
//!
//! The atom number obeys `dN/dt = R - N/τ - (β/V_eff) N²`.

use crate::constants::{K_B, MU_B};
use crate::error::{Error, Result};
use crate::field::QuadrupoleFieldConfig;
use crate::ode::{Dopri5, OdeOptions};
use crate::species::SpeciesParams;
use std::f64::consts::{E, PI};

pub const LOADING_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadingParams {
    /// Loading rate R, atoms/s.
    pub rate: f64,
    /// One-body 1/e lifetime τ, s.
    pub tau: f64,
    /// Two-body inelastic loss coefficient β, m³/s.
    pub beta: f64,
    /// Effective volume of the density term, m³.
    pub v_eff: f64,
    /// Atom number at t = 0.
    pub n0: f64,
}

impl Default for LoadingParams {
    fn default() -> Self {
        LoadingParams {
            rate: 1.7e7,
            tau: 0.12,
            beta: 0.0,
            v_eff: 1e-9,
            n0: 0.0,
        }
    }
}

impl LoadingParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.rate) && self.rate >= 0.0) {
            return Err(Error::config("loading rate must be non-negative"));
        }
        if !(ok(self.tau) && self.tau > 0.0) {
            return Err(Error::config("lifetime tau must be positive"));
        }
        if !(ok(self.beta) && self.beta >= 0.0) {
            return Err(Error::config("two-body coefficient beta must be non-negative"));
        }
        if !(ok(self.v_eff) && self.v_eff > 0.0) {
            return Err(Error::config("effective volume must be positive"));
        }
        if !(ok(self.n0) && self.n0 >= 0.0) {
            return Err(Error::config("initial atom number must be non-negative"));
        }
        Ok(())
    }

    /// Two-body loss rate per atom pair, β/V_eff, 1/s.
    pub fn two_body_rate(&self) -> f64 {
        self.beta / self.v_eff
    }

    pub fn derivative(&self, n: f64) -> f64 {
        self.rate - n / self.tau - self.two_body_rate() * n * n
    }
}

/// Atom number on `t_grid`, which must start at 0 and increase strictly.
pub fn integrate_loading(p: &LoadingParams, t_grid: &[f64]) -> Result<Vec<f64>> {
    p.validate()?;
    match t_grid.first() {
        None => return Ok(Vec::new()),
        Some(&t0) if t0 != 0.0 => return Err(Error::domain("time grid must start at 0")),
        _ => {}
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("time grid must be finite and strictly increasing"));
    }
    let scale = p.n0.max(steady_state(p)?).max(1.0);
    let opts = OdeOptions {
        rtol: LOADING_RTOL,
        atol: LOADING_RTOL * 1e-3 * scale,
        ..Default::default()
    };
    let mut solver = Dopri5::new(|_, n: &f64, dn: &mut f64| *dn = p.derivative(*n), 0.0, p.n0, opts);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        solver.advance_to(t)?;
        out.push(solver.state().max(0.0));
    }
    Ok(out)
}

/// Positive root of `R - N/τ - (β/V_eff) N² = 0`.
pub fn steady_state(p: &LoadingParams) -> Result<f64> {
    p.validate()?;
    let k = p.two_body_rate();
    if k == 0.0 {
        return Ok(p.rate * p.tau);
    }
    let g = 1.0 / p.tau;
    // rationalized root, free of cancellation for small k
    Ok(2.0 * p.rate / (g + (g * g + 4.0 * k * p.rate).sqrt()))
}

/// Time for a cloud loaded from `n0` to reach `n0 + (1 - 1/e)(N∞ - n0)`.
pub fn rise_time(p: &LoadingParams) -> Result<f64> {
    let n_inf = steady_state(p)?;
    if !(n_inf > p.n0) {
        return Err(Error::domain("rise time needs n0 below the steady state"));
    }
    let target = p.n0 + (1.0 - 1.0 / E) * (n_inf - p.n0);
    // the rise is never slower than the one-body time constant
    let dt = p.tau / 2000.0;
    let grid: Vec<f64> = (0..=20_000).map(|i| i as f64 * dt).collect();
    let n = integrate_loading(p, &grid)?;
    let i = n
        .iter()
        .position(|&v| v >= target)
        .ok_or_else(|| Error::domain("steady state not approached within 10 lifetimes"))?;
    let (t0, t1, n0, n1) = (grid[i - 1], grid[i], n[i - 1], n[i]);
    Ok(t0 + (target - n0) / (n1 - n0) * (t1 - t0))
}

fn linear_force(m: i32, quad: &QuadrupoleFieldConfig, sp: &SpeciesParams) -> Result<f64> {
    if m <= 0 {
        return Err(Error::domain(format!("sublevel m = {m} is not magnetically trapped")));
    }
    quad.validate()?;
    sp.validate()?;
    Ok(f64::from(m) * sp.g_j * MU_B * quad.gradient_axial)
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain("temperature must be positive"));
    }
    Ok(())
}

/// 1/e radius `k_B T / (m g_J μ_B B')` of a Boltzmann cloud in the linear potential.
pub fn thermal_radius(m: i32, temperature: f64, quad: &QuadrupoleFieldConfig, sp: &SpeciesParams) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(K_B * temperature / linear_force(m, quad, sp)?)
}

/// Mean sublevel implied by an observed 1/e radius. Not rounded to an integer.
pub fn mean_m_estimate(radius: f64, temperature: f64, quad: &QuadrupoleFieldConfig, sp: &SpeciesParams) -> Result<f64> {
    check_temperature(temperature)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain("radius must be positive"));
    }
    quad.validate()?;
    sp.validate()?;
    Ok(K_B * temperature / (radius * sp.g_j * MU_B * quad.gradient_axial))
}

/// Period `4 √(2 M r / F)` of a bounce in `F|x|` with turning point at the
/// thermal radius.
pub fn oscillation_period_estimate(
    m: i32,
    temperature: f64,
    quad: &QuadrupoleFieldConfig,
    sp: &SpeciesParams,
) -> Result<f64> {
    let r = thermal_radius(m, temperature, quad, sp)?;
    let f = linear_force(m, quad, sp)?;
    Ok(4.0 * (2.0 * sp.mass * r / f).sqrt())
}

/// Gaussian effective volume `(2π)^{3/2} σx σy σz` of a thermal cloud in a
/// harmonic trap with angular frequencies `omega`.
pub fn gaussian_effective_volume(omega: [f64; 3], mass: f64, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    if !(mass > 0.0) || omega.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::domain("mass and trap frequencies must be positive"));
    }
    let sigma = |w: f64| (K_B * temperature / (mass * w * w)).sqrt();
    Ok((2.0 * PI).powf(1.5) * omega.iter().map(|&w| sigma(w)).product::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_without_two_body_loss() {
        let p = LoadingParams::default();
        assert_eq!(steady_state(&p).unwrap(), p.rate * p.tau);
    }

    #[test]
    fn steady_state_is_a_root() {
        let p = LoadingParams {
            beta: 1e-17,
            v_eff: 1e-11,
            ..Default::default()
        };
        let n = steady_state(&p).unwrap();
        assert!(p.derivative(n).abs() < 1e-9 * p.rate);
        assert!(n < p.rate * p.tau);
    }

    #[test]
    fn grid_must_start_at_zero() {
        let p = LoadingParams::default();
        assert!(integrate_loading(&p, &[0.1, 0.2]).is_err());
        assert!(integrate_loading(&p, &[0.0, 0.2, 0.2]).is_err());
        assert!(integrate_loading(&p, &[]).unwrap().is_empty());
    }

    #[test]
    fn untrapped_sublevels_are_rejected() {
        let q = QuadrupoleFieldConfig::default();
        let sp = SpeciesParams::chromium_5d4();
        assert!(thermal_radius(0, 1e-4, &q, &sp).is_err());
        assert!(oscillation_period_estimate(-2, 1e-4, &q, &sp).is_err());
        assert!(thermal_radius(2, 0.0, &q, &sp).is_err());
    }

    #[test]
    fn isotropic_volume() {
        let w = 2.0 * PI * 100.0;
        let m = 1e-25;
        let v = gaussian_effective_volume([w; 3], m, 1e-4).unwrap();
        let s = (K_B * 1e-4 / (m * w * w)).sqrt();
        assert!((v / (2.0 * PI * s * s).powf(1.5) - 1.0).abs() < 1e-14);
    }
}
