use super::hamiltonian::{HamiltonianSpec, LabFrame, TimeDependentHamiltonian};
use super::spin::{SpinState, C64};
use crate::error::{Error, Result};
use crate::ode::{OdeFailure, OdeOptions, OdeStats};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Default local relative tolerance of the Schrödinger integrator.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub state: SpinState,
    /// ‖ψ(t1)‖² − 1. The state is not renormalized.
    pub norm_drift: f64,
    pub stats: OdeStats,
}

fn check_tolerance(tol: f64) -> Result<()> {
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(Error::domain(format!("tolerance {tol:e} outside [1e-12, 1e-6]")));
    }
    Ok(())
}

fn exp_minus_i(k: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(k.clone());
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -l).exp()));
    v * phases * v.adjoint()
}

/// One fourth-order Magnus step over [t, t + dt] with Gauss–Legendre nodes.
fn magnus_step<H: TimeDependentHamiltonian + ?Sized>(h: &H, t: f64, dt: f64) -> DMatrix<C64> {
    let off = 3f64.sqrt() / 6.0;
    let h1 = h.matrix(t + (0.5 - off) * dt);
    let h2 = h.matrix(t + (0.5 + off) * dt);
    // Ω₄ = −i K with K = (dt/2)(H1 + H2) − i (√3 dt²/12) [H2, H1]
    let comm = &h2 * &h1 - &h1 * &h2;
    let k = (&h1 + &h2) * C64::new(0.5 * dt, 0.0)
        + comm * C64::new(0.0, -(3f64.sqrt()) * dt * dt / 12.0);
    exp_minus_i(&k)
}

/// Solve i dψ/dt = (H(t)/ħ) ψ from `t0` to `t1`.
///
/// Fourth-order Magnus steps with exact exponentials keep the evolution
/// unitary to rounding error. The step size is adapted by step doubling so
/// that the estimated local amplitude error stays below `tol`.
pub fn propagate_hamiltonian<H: TimeDependentHamiltonian + ?Sized>(
    h: &H,
    psi0: &DVector<C64>,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<(DVector<C64>, OdeStats)> {
    check_tolerance(tol)?;
    if !(t1 > t0) {
        return Err(Error::domain(format!("propagation needs t1 > t0 (got {t0:e}, {t1:e})")));
    }
    if psi0.len() != h.dim() {
        return Err(Error::domain("state dimension does not match Hamiltonian"));
    }
    let h_max = h.max_step_hint().unwrap_or(f64::INFINITY);
    let mut stats = OdeStats::default();
    let mut psi = psi0.clone();
    let mut t = t0;
    let mut dt = h_max.min(t1 - t0);
    let max_steps = OdeOptions::default().max_steps;
    while t < t1 {
        if stats.accepted + stats.rejected >= max_steps {
            return Err(Error::Integration {
                t,
                reason: OdeFailure::TooManySteps.to_string(),
            });
        }
        let remaining = t1 - t;
        let last = dt >= remaining * (1.0 - 1e-12);
        let step = if last { remaining } else { dt };
        if step <= 1e-14 * t.abs().max(remaining) {
            return Err(Error::Integration {
                t,
                reason: OdeFailure::StepSizeUnderflow.to_string(),
            });
        }
        let full = magnus_step(h, t, step) * &psi;
        let half = 0.5 * step;
        let fine = magnus_step(h, t + half, half) * (magnus_step(h, t, half) * &psi);
        stats.evaluations += 6;
        // Richardson estimate of the error of the two half steps
        let err = (&fine - &full).iter().map(|c| c.norm()).fold(0.0, f64::max) / 15.0 / tol;
        if !err.is_finite() {
            return Err(Error::Integration {
                t,
                reason: OdeFailure::NonFinite.to_string(),
            });
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            psi = fine;
            t = if last { t1 } else { t + step };
            stats.accepted += 1;
            dt = (step * factor).min(h_max);
        } else {
            stats.rejected += 1;
            dt = step * factor.min(1.0);
        }
    }
    Ok((psi, stats))
}

/// Propagate `psi0` under the lab-frame Hamiltonian of `spec`.
pub fn propagate(
    spec: &HamiltonianSpec,
    psi0: &SpinState,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<PropagationResult> {
    spec.validate()?;
    if psi0.two_j != spec.species.two_j() {
        return Err(Error::domain("initial state J does not match the species"));
    }
    if (psi0.norm_sqr() - 1.0).abs() > 1e-9 {
        return Err(Error::domain("initial state is not normalized"));
    }
    let lab = LabFrame {
        spec,
        ladder: spec.ladder(),
    };
    let (psi, stats) = propagate_hamiltonian(&lab, &psi0.amplitudes, t0, t1, tol)?;
    let state = SpinState::new(psi0.two_j, psi)?;
    let norm_drift = state.norm_sqr() - 1.0;
    Ok(PropagationResult {
        state,
        norm_drift,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{HBAR, MU_B};
    use crate::quantum::hamiltonian::RotatingFrameSweep;
    use crate::quantum::spin::SpinLadder;
    use crate::species::SpeciesParams;
    use crate::sweep::RfSweepConfig;
    use crate::Vec3;

    #[test]
    fn free_evolution_is_identity() {
        let spec = HamiltonianSpec::new(SpeciesParams::chromium_5d4(), Vec3::zeros(), RfSweepConfig::default());
        let psi0 = SpinState::new(
            8,
            DVector::from_fn(9, |k, _| C64::new(1.0, k as f64) / (9.0f64 + 204.0).sqrt()),
        )
        .unwrap();
        let out = propagate(&spec, &psi0, 0.0, 1e-5, 1e-10).unwrap();
        assert!((out.state.amplitudes - psi0.amplitudes).norm() < 1e-12);
    }

    #[test]
    fn stationary_state_phase() {
        let b = 1e-4;
        let spec = HamiltonianSpec::new(
            SpeciesParams::chromium_5d4(),
            Vec3::new(0.0, 0.0, b),
            RfSweepConfig::default(),
        );
        let tol = 1e-10;
        let psi0 = SpinState::basis(8, 3.0).unwrap();
        let t1 = 20e-6;
        let out = propagate(&spec, &psi0, 0.0, t1, tol).unwrap();
        let e = 3.0 * spec.species.g_j * MU_B * b;
        let expected = C64::new(0.0, -e * t1 / HBAR).exp();
        assert!((out.state.amplitudes[7] - expected).norm() < 100.0 * tol);
        assert!((out.state.populations()[7] - 1.0).abs() < 10.0 * tol);
    }

    #[test]
    fn energy_conserved_for_static_field() {
        let spec = HamiltonianSpec::new(
            SpeciesParams::chromium_5d4(),
            Vec3::new(3e-5, -2e-5, 1e-4),
            RfSweepConfig::default(),
        );
        let tol = 1e-9;
        let psi0 = SpinState::basis(8, 2.0).unwrap();
        let out = propagate(&spec, &psi0, 0.0, 10e-6, tol).unwrap();
        let h = build(&spec);
        let e0 = psi0.amplitudes.dotc(&(&h * &psi0.amplitudes)).re;
        let e1 = out.state.amplitudes.dotc(&(&h * &out.state.amplitudes)).re;
        assert!((e1 - e0).abs() < 10.0 * tol * e0.abs());
        assert!(out.norm_drift.abs() < 10.0 * tol);
    }

    fn build(spec: &HamiltonianSpec) -> DMatrix<C64> {
        crate::quantum::build_hamiltonian(0.0, spec)
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = HamiltonianSpec::new(SpeciesParams::chromium_5d4(), Vec3::zeros(), RfSweepConfig::default());
        let psi0 = SpinState::basis(8, 0.0).unwrap();
        assert!(propagate(&spec, &psi0, 0.0, 1e-6, 1e-3).is_err());
        assert!(propagate(&spec, &psi0, 1e-6, 0.0, 1e-9).is_err());
        let wrong = SpinState::basis(6, 0.0).unwrap();
        assert!(propagate(&spec, &wrong, 0.0, 1e-6, 1e-9).is_err());
    }

    fn piecewise_constant_oracle<H: TimeDependentHamiltonian>(
        h: &H,
        psi0: &DVector<C64>,
        t0: f64,
        t1: f64,
        steps: usize,
    ) -> DVector<C64> {
        let dt = (t1 - t0) / steps as f64;
        let mut psi = psi0.clone();
        for s in 0..steps {
            let m = h.matrix(t0 + (s as f64 + 0.5) * dt) * C64::new(dt, 0.0);
            let eig = SymmetricEigen::new(m);
            let v = &eig.eigenvectors;
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -l).exp()));
            psi = v * d * (v.adjoint() * psi);
        }
        psi
    }

    #[test]
    fn agrees_with_piecewise_constant_oracle_on_rotating_sweep() {
        let h = RotatingFrameSweep {
            ladder: SpinLadder::new(2),
            omega: 1.0,
            detuning_rate: 1.0,
            t_center: 10.0,
        };
        let psi0 = SpinState::basis(2, 1.0).unwrap().amplitudes;
        let (a, _) = propagate_hamiltonian(&h, &psi0, 0.0, 20.0, 1e-11).unwrap();
        let b = piecewise_constant_oracle(&h, &psi0, 0.0, 20.0, 20000);
        assert!((1.0 - a.dotc(&b).norm_sqr()).abs() < 1e-8);
    }
}
