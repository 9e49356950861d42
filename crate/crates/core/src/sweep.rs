//! Seesaw RF frequency sweeps.

use crate::error::{Error, Result};
use crate::Vec3;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepShape {
    /// ν ramps from ν_min to ν_max, then jumps back.
    LinearUp,
    /// ν ramps from ν_max to ν_min, then jumps back.
    LinearDown,
}

impl SweepShape {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepShape::LinearUp => "linear_up",
            SweepShape::LinearDown => "linear_down",
        }
    }
}

impl std::str::FromStr for SweepShape {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear_up" => Ok(SweepShape::LinearUp),
            "linear_down" => Ok(SweepShape::LinearDown),
            _ => Err(format!("unknown sweep shape {s:?} (expected linear_up or linear_down)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfSweepConfig {
    pub nu_min: f64,
    pub nu_max: f64,
    /// Repetition rate 1/t_S, Hz.
    pub sweep_rate: f64,
    pub shape: SweepShape,
    /// RF magnetic field amplitude at the atoms, T.
    pub b_rf: f64,
    /// Unit vector of the linear RF polarization.
    pub polarization_axis: Vec3,
    /// When set, each period starts with a pseudo-random phase drawn from this
    /// seed instead of continuing the accumulated phase.
    pub phase_reset_seed: Option<u64>,
}

impl Default for RfSweepConfig {
    fn default() -> Self {
        RfSweepConfig {
            nu_min: 500e3,
            nu_max: 7e6,
            sweep_rate: 10e3,
            shape: SweepShape::LinearUp,
            b_rf: 0.0,
            polarization_axis: Vec3::z(),
            phase_reset_seed: None,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RfSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu_min > 0.0 && self.nu_min < self.nu_max && self.nu_max.is_finite()) {
            return Err(Error::config(format!(
                "sweep band must satisfy 0 < nu_min < nu_max (got {} Hz, {} Hz)",
                self.nu_min, self.nu_max
            )));
        }
        if !(self.sweep_rate > 0.0 && self.sweep_rate.is_finite()) {
            return Err(Error::config("sweep rate must be positive"));
        }
        if !(self.b_rf >= 0.0 && self.b_rf.is_finite()) {
            return Err(Error::config("RF amplitude must be non-negative"));
        }
        if (self.polarization_axis.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config("polarization axis must be a unit vector"));
        }
        Ok(())
    }

    /// Sweep period t_S, s.
    pub fn period(&self) -> f64 {
        1.0 / self.sweep_rate
    }

    /// Swept span Δν = ν_max − ν_min, Hz.
    pub fn span(&self) -> f64 {
        self.nu_max - self.nu_min
    }

    /// dν/dt during a ramp, Hz/s (negative for down ramps).
    pub fn ramp_slope(&self) -> f64 {
        match self.shape {
            SweepShape::LinearUp => self.span() * self.sweep_rate,
            SweepShape::LinearDown => -self.span() * self.sweep_rate,
        }
    }

    /// Frequency at time `tau` into a period, `tau ∈ [0, t_S]`.
    pub fn frequency_in_period(&self, tau: f64) -> f64 {
        let frac = tau * self.sweep_rate;
        match self.shape {
            SweepShape::LinearUp => self.nu_min + self.span() * frac,
            SweepShape::LinearDown => self.nu_max - self.span() * frac,
        }
    }

    /// Time into the period at which the ramp passes `nu`, if inside the band.
    pub fn time_of_frequency(&self, nu: f64) -> Option<f64> {
        if !(nu >= self.nu_min && nu <= self.nu_max) {
            return None;
        }
        let frac = match self.shape {
            SweepShape::LinearUp => (nu - self.nu_min) / self.span(),
            SweepShape::LinearDown => (self.nu_max - nu) / self.span(),
        };
        Some(frac * self.period())
    }

    fn phase_in_period(&self, tau: f64) -> f64 {
        let start = match self.shape {
            SweepShape::LinearUp => self.nu_min,
            SweepShape::LinearDown => self.nu_max,
        };
        2.0 * PI * (start * tau + 0.5 * self.ramp_slope() * tau * tau)
    }

    fn period_start_phase(&self, k: u64) -> f64 {
        match self.phase_reset_seed {
            Some(seed) => {
                let bits = splitmix64(seed ^ splitmix64(k)) >> 11;
                2.0 * PI * (bits as f64 / (1u64 << 53) as f64)
            }
            None => {
                let per_period = (PI * self.period() * (self.nu_min + self.nu_max)) % (2.0 * PI);
                (k as f64 * per_period) % (2.0 * PI)
            }
        }
    }

    /// Split `t` into (period index, time into the period).
    pub fn period_split(&self, t: f64) -> (u64, f64) {
        let k = (t * self.sweep_rate).floor().max(0.0);
        let tau = (t - k * self.period()).max(0.0);
        (k as u64, tau)
    }
}

/// Instantaneous frequency (Hz) and phase (rad) of the sweep at time `t ≥ 0`.
///
/// The phase is continuous across the frequency jumps at period boundaries
/// unless `phase_reset_seed` is set. It is reduced modulo 2π per period.
pub fn sweep_instantaneous(t: f64, cfg: &RfSweepConfig) -> (f64, f64) {
    let (k, tau) = cfg.period_split(t);
    (
        cfg.frequency_in_period(tau),
        cfg.period_start_phase(k) + cfg.phase_in_period(tau),
    )
}
