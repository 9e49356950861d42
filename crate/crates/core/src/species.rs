//! Atomic species data.

use crate::constants::AMU;
use crate::error::{Error, Result};

/// Mass of chromium-52, u.
pub const CR52_MASS_U: f64 = 51.940_505_7;

/// Landé factor of a fine-structure level from its L, S, J quantum numbers.
pub fn lande_g(l: f64, s: f64, j: f64) -> f64 {
    1.0 + (j * (j + 1.0) + s * (s + 1.0) - l * (l + 1.0)) / (2.0 * j * (j + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesParams {
    /// Total angular momentum quantum number.
    pub j: f64,
    /// Landé factor.
    pub g_j: f64,
    /// Mass, kg.
    pub mass: f64,
}

impl SpeciesParams {
    pub fn new(j: f64, g_j: f64, mass: f64) -> Result<Self> {
        let s = SpeciesParams { j, g_j, mass };
        s.validate()?;
        Ok(s)
    }

    /// Metastable 5D4 chromium-52 (L = 2, S = 2, J = 4).
    pub fn chromium_5d4() -> Self {
        SpeciesParams {
            j: 4.0,
            g_j: lande_g(2.0, 2.0, 4.0),
            mass: CR52_MASS_U * AMU,
        }
    }

    /// Ground-state 7S3 chromium-52 (L = 0, S = 3, J = 3).
    pub fn chromium_7s3() -> Self {
        SpeciesParams {
            j: 3.0,
            g_j: lande_g(0.0, 3.0, 3.0),
            mass: CR52_MASS_U * AMU,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let two_j = 2.0 * self.j;
        if !(self.j > 0.0) || (two_j - two_j.round()).abs() > 1e-12 {
            return Err(Error::config(format!(
                "J = {} must be a positive integer or half-integer",
                self.j
            )));
        }
        if !(self.g_j > 0.0 && self.g_j.is_finite()) {
            return Err(Error::config(format!("g_J = {} must be positive", self.g_j)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::config(format!("mass = {} must be positive", self.mass)));
        }
        Ok(())
    }

    /// 2J as an integer.
    pub fn two_j(&self) -> u32 {
        (2.0 * self.j).round() as u32
    }

    /// Number of Zeeman sublevels, 2J + 1.
    pub fn dim(&self) -> usize {
        self.two_j() as usize + 1
    }

    /// Integer J, for the Monte Carlo which labels atoms by integer m.
    pub fn integer_j(&self) -> Result<i32> {
        let tj = self.two_j();
        if tj % 2 != 0 {
            return Err(Error::domain(format!(
                "J = {} is half-integer; integer sublevel labels required",
                self.j
            )));
        }
        Ok((tj / 2) as i32)
    }
}

impl Default for SpeciesParams {
    fn default() -> Self {
        Self::chromium_5d4()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chromium_lande_factors() {
        assert!((SpeciesParams::chromium_5d4().g_j - 1.5).abs() < 1e-15);
        assert!((SpeciesParams::chromium_7s3().g_j - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_j() {
        assert!(SpeciesParams::new(1.3, 1.0, 1e-26).is_err());
        assert!(SpeciesParams::new(0.0, 1.0, 1e-26).is_err());
        assert!(SpeciesParams::new(0.5, 2.0, 1e-26).is_ok());
        assert!(SpeciesParams::new(0.5, 2.0, 1e-26).unwrap().integer_j().is_err());
    }
}
