//! Unit-suffixed quantity parsing and SI formatting.
//!
//! Every physical input enters the crate through [`parse_quantity`], which
//! resolves a string such as `"9 G/cm"` or `"100 uK"` to its SI value for an
//! expected [`Dimension`]. [`format_si`] writes the SI value back with the SI
//! unit suffix, using the shortest round-trip float formatting so that
//! `parse_quantity(format_si(x)) == x` bit for bit.

use crate::constants::{AMU, H, K_B};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("missing unit suffix in {0:?} (expected {1})")]
    MissingUnit(String, &'static str),
    #[error("unknown unit {unit:?} for {dim}")]
    UnknownUnit { unit: String, dim: &'static str },
    #[error("cannot parse number in {0:?}")]
    BadNumber(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Frequency,
    MagneticField,
    FieldGradient,
    Temperature,
    /// Energies may also be written as temperatures (k_B T) or frequencies (h nu).
    Energy,
    Power,
    Mass,
    /// Events per second (loading rate, inverse lifetimes).
    Rate,
    Volume,
    /// Two-body loss coefficient.
    VolumeRate,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::MagneticField => "magnetic field",
            Dimension::FieldGradient => "field gradient",
            Dimension::Temperature => "temperature",
            Dimension::Energy => "energy",
            Dimension::Power => "power",
            Dimension::Mass => "mass",
            Dimension::Rate => "rate",
            Dimension::Volume => "volume",
            Dimension::VolumeRate => "volume rate",
        }
    }

    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Length => "m",
            Dimension::Time => "s",
            Dimension::Frequency => "Hz",
            Dimension::MagneticField => "T",
            Dimension::FieldGradient => "T/m",
            Dimension::Temperature => "K",
            Dimension::Energy => "J",
            Dimension::Power => "W",
            Dimension::Mass => "kg",
            Dimension::Rate => "1/s",
            Dimension::Volume => "m^3",
            Dimension::VolumeRate => "m^3/s",
        }
    }

    /// Multiplicative factor taking a value in `unit` to SI.
    pub fn factor(self, unit: &str) -> Option<f64> {
        let f = match (self, unit) {
            (Dimension::Length, "m") => 1.0,
            (Dimension::Length, "cm") => 1e-2,
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Length, "um" | "μm" | "µm") => 1e-6,
            (Dimension::Length, "nm") => 1e-9,

            (Dimension::Time, "s") => 1.0,
            (Dimension::Time, "ms") => 1e-3,
            (Dimension::Time, "us" | "μs" | "µs") => 1e-6,
            (Dimension::Time, "ns") => 1e-9,

            (Dimension::Frequency, "Hz") => 1.0,
            (Dimension::Frequency, "kHz") => 1e3,
            (Dimension::Frequency, "MHz") => 1e6,
            (Dimension::Frequency, "GHz") => 1e9,

            (Dimension::MagneticField, "T") => 1.0,
            (Dimension::MagneticField, "mT") => 1e-3,
            (Dimension::MagneticField, "uT" | "μT" | "µT") => 1e-6,
            (Dimension::MagneticField, "G") => 1e-4,
            (Dimension::MagneticField, "mG") => 1e-7,

            (Dimension::FieldGradient, "T/m") => 1.0,
            (Dimension::FieldGradient, "G/cm") => 1e-2,
            (Dimension::FieldGradient, "G/m") => 1e-4,
            (Dimension::FieldGradient, "mT/m") => 1e-3,

            (Dimension::Temperature, "K") => 1.0,
            (Dimension::Temperature, "mK") => 1e-3,
            (Dimension::Temperature, "uK" | "μK" | "µK") => 1e-6,
            (Dimension::Temperature, "nK") => 1e-9,

            (Dimension::Energy, "J") => 1.0,
            (Dimension::Energy, "K") => K_B,
            (Dimension::Energy, "mK") => 1e-3 * K_B,
            (Dimension::Energy, "uK" | "μK" | "µK") => 1e-6 * K_B,
            (Dimension::Energy, "Hz") => H,
            (Dimension::Energy, "kHz") => 1e3 * H,
            (Dimension::Energy, "MHz") => 1e6 * H,

            (Dimension::Power, "W") => 1.0,
            (Dimension::Power, "mW") => 1e-3,
            (Dimension::Power, "kW") => 1e3,

            (Dimension::Mass, "kg") => 1.0,
            (Dimension::Mass, "u" | "amu") => AMU,

            (Dimension::Rate, "1/s" | "Hz" | "/s") => 1.0,
            (Dimension::Rate, "1/ms") => 1e3,

            (Dimension::Volume, "m^3") => 1.0,
            (Dimension::Volume, "cm^3") => 1e-6,
            (Dimension::Volume, "mm^3") => 1e-9,
            (Dimension::Volume, "um^3") => 1e-18,

            (Dimension::VolumeRate, "m^3/s") => 1.0,
            (Dimension::VolumeRate, "cm^3/s") => 1e-6,
            _ => return None,
        };
        Some(f)
    }
}

fn split_number(text: &str) -> (&str, &str) {
    let t = text.trim();
    if let Some(idx) = t.find(char::is_whitespace) {
        return (&t[..idx], t[idx..].trim());
    }
    let bytes = t.as_bytes();
    let mut end = 0;
    while end < bytes.len() {
        let c = bytes[end];
        let numeric = c.is_ascii_digit()
            || c == b'.'
            || ((c == b'+' || c == b'-') && (end == 0 || matches!(bytes[end - 1], b'e' | b'E')))
            || ((c == b'e' || c == b'E')
                && end > 0
                && bytes
                    .get(end + 1)
                    .is_some_and(|n| n.is_ascii_digit() || *n == b'-' || *n == b'+'));
        if !numeric {
            break;
        }
        end += 1;
    }
    (&t[..end], &t[end..])
}

/// Parse `"<number> <unit>"` into an SI value of dimension `dim`.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let (num, unit) = split_number(text);
    let value: f64 = num
        .parse()
        .map_err(|_| UnitError::BadNumber(text.trim().to_string()))?;
    if unit.is_empty() {
        return Err(UnitError::MissingUnit(text.trim().to_string(), dim.si_unit()));
    }
    let factor = dim.factor(unit).ok_or_else(|| UnitError::UnknownUnit {
        unit: unit.to_string(),
        dim: dim.name(),
    })?;
    Ok(value * factor)
}

/// Format an SI value with its SI unit; exact inverse of [`parse_quantity`].
pub fn format_si(value: f64, dim: Dimension) -> String {
    format!("{value:e} {}", dim.si_unit())
}
