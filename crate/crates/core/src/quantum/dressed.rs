use crate::constants::HBAR;
use crate::error::Result;

/// Rotating-wave dressed-state energies m′ ħ √(δ² + Ω²), m′ = −J … J, in J.
///
/// Only valid in the rotating-wave approximation; the propagator does not use
/// it.
pub fn dressed_energies(delta: f64, omega: f64, j: f64) -> Result<Vec<f64>> {
    let ladder = super::spin::SpinLadder::from_j(j)?;
    let gap = HBAR * delta.hypot(omega);
    Ok((0..ladder.dim()).map(|k| ladder.m(k) * gap).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonance_and_bare_limits() {
        let e = dressed_energies(0.0, 1e6, 4.0).unwrap();
        for w in e.windows(2) {
            assert!((w[1] - w[0] - HBAR * 1e6).abs() < 1e-12 * HBAR * 1e6);
        }
        let e = dressed_energies(-3e6, 0.0, 2.0).unwrap();
        assert!((e[4] - 2.0 * HBAR * 3e6).abs() < 1e-40);
    }

    #[test]
    fn monotone_in_detuning_for_positive_levels() {
        let mut last = f64::NEG_INFINITY;
        for i in 0..100 {
            let e = dressed_energies(1e5 * i as f64, 2e5, 4.0).unwrap();
            assert!(e[8] > last);
            last = e[8];
        }
    }
}
