use super::spin::{SpinLadder, C64};
use crate::constants::{HBAR, MU_B};
use crate::error::Result;
use crate::species::SpeciesParams;
use crate::sweep::{sweep_instantaneous, RfSweepConfig};
use crate::Vec3;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// A Hamiltonian H(t)/ħ (rad/s) acting on a finite spin space.
pub trait TimeDependentHamiltonian: Sync {
    fn dim(&self) -> usize;

    /// `out = H(t) ψ / ħ`.
    fn apply(&self, t: f64, psi: &DVector<C64>, out: &mut DVector<C64>);

    /// Largest step the integrator may take, if the model has a known fastest
    /// timescale.
    fn max_step_hint(&self) -> Option<f64> {
        None
    }

    /// Dense H(t)/ħ.
    fn matrix(&self, t: f64) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        let mut col = DVector::zeros(n);
        for k in 0..n {
            e.fill(C64::new(0.0, 0.0));
            e[k] = C64::new(1.0, 0.0);
            self.apply(t, &e, &mut col);
            m.set_column(k, &col);
        }
        m
    }
}

/// Amplitude envelope of the RF within each sweep period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RfEnvelope {
    /// Constant amplitude b_rf.
    Constant,
    /// sin² ramps on and off over the first and last `fraction` of every
    /// period, so a single-period propagation starts and ends without a
    /// sudden switch of the coupling.
    EdgeRamped { fraction: f64 },
}

impl RfEnvelope {
    pub fn value(&self, tau_fraction: f64) -> f64 {
        match *self {
            RfEnvelope::Constant => 1.0,
            RfEnvelope::EdgeRamped { fraction } => {
                if fraction <= 0.0 {
                    1.0
                } else if tau_fraction < fraction {
                    (0.5 * PI * tau_fraction / fraction).sin().powi(2)
                } else if tau_fraction > 1.0 - fraction {
                    (0.5 * PI * (1.0 - tau_fraction) / fraction).sin().powi(2)
                } else {
                    1.0
                }
            }
        }
    }
}

/// Lab-frame Zeeman Hamiltonian of one atom in a static field plus a linearly
/// polarized swept RF field: H = g_J μ_B [B₀ + b_rf cos φ(t) ê]·J.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub species: SpeciesParams,
    /// Local static field, T.
    pub static_b: Vec3,
    pub sweep: RfSweepConfig,
    pub envelope: RfEnvelope,
}

impl HamiltonianSpec {
    pub fn new(species: SpeciesParams, static_b: Vec3, sweep: RfSweepConfig) -> Self {
        HamiltonianSpec {
            species,
            static_b,
            sweep,
            envelope: RfEnvelope::Constant,
        }
    }

    /// Total magnetic field at time `t`, T.
    pub fn field_at(&self, t: f64) -> Vec3 {
        if self.sweep.b_rf == 0.0 {
            return self.static_b;
        }
        let (_, phase) = sweep_instantaneous(t, &self.sweep);
        let (_, tau) = self.sweep.period_split(t);
        let env = self.envelope.value(tau * self.sweep.sweep_rate);
        self.static_b + self.sweep.polarization_axis * (self.sweep.b_rf * env * phase.cos())
    }

    /// Coupling g_J μ_B / ħ, rad s⁻¹ T⁻¹.
    pub fn gyromagnetic(&self) -> f64 {
        self.species.g_j * MU_B / HBAR
    }

    pub(crate) fn ladder(&self) -> SpinLadder {
        SpinLadder::new(self.species.two_j())
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        if !self.static_b.iter().all(|c| c.is_finite()) {
            return Err(crate::Error::config("static field must be finite"));
        }
        self.sweep.validate()
    }
}

pub(crate) struct LabFrame<'a> {
    pub spec: &'a HamiltonianSpec,
    pub ladder: SpinLadder,
}

impl TimeDependentHamiltonian for LabFrame<'_> {
    fn dim(&self) -> usize {
        self.ladder.dim()
    }

    fn apply(&self, t: f64, psi: &DVector<C64>, out: &mut DVector<C64>) {
        let a = self.spec.field_at(t) * self.spec.gyromagnetic();
        self.ladder.apply([a.x, a.y, a.z], psi, out);
    }

    fn max_step_hint(&self) -> Option<f64> {
        // never step over a whole RF carrier cycle
        (self.spec.sweep.b_rf > 0.0).then(|| 1.0 / self.spec.sweep.nu_max)
    }
}

/// H(t) in joules as a dense Hermitian matrix.
pub fn build_hamiltonian(t: f64, spec: &HamiltonianSpec) -> DMatrix<C64> {
    let lab = LabFrame {
        spec,
        ladder: spec.ladder(),
    };
    lab.matrix(t) * C64::new(HBAR, 0.0)
}

/// Rotating-frame Landau–Zener sweep of a spin J:
/// H/ħ = δ(t) J_z + Ω J_x with δ(t) = rate·(t − t_center).
///
/// For J = 1/2 this is (1/2)(δ σ_z + Ω σ_x).
#[derive(Debug, Clone, PartialEq)]
pub struct RotatingFrameSweep {
    pub ladder: SpinLadder,
    pub omega: f64,
    pub detuning_rate: f64,
    pub t_center: f64,
}

impl TimeDependentHamiltonian for RotatingFrameSweep {
    fn dim(&self) -> usize {
        self.ladder.dim()
    }

    fn apply(&self, t: f64, psi: &DVector<C64>, out: &mut DVector<C64>) {
        let delta = self.detuning_rate * (t - self.t_center);
        self.ladder.apply([self.omega, 0.0, delta], psi, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::spin::angular_momentum_matrices;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(static_b: Vec3, b_rf: f64) -> HamiltonianSpec {
        HamiltonianSpec::new(
            SpeciesParams::chromium_5d4(),
            static_b,
            RfSweepConfig {
                b_rf,
                polarization_axis: Vec3::x(),
                ..Default::default()
            },
        )
    }

    fn sorted_eigenvalues(m: DMatrix<C64>) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn zero_fields_give_zero_matrix() {
        let h = build_hamiltonian(1.3e-6, &spec(Vec3::zeros(), 0.0));
        assert!(h.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn static_z_field_is_diagonal_zeeman() {
        let b = 2e-4;
        let s = spec(Vec3::new(0.0, 0.0, b), 0.0);
        let h = build_hamiltonian(0.0, &s);
        let sp = s.species;
        for r in 0..9 {
            for c in 0..9 {
                if r == c {
                    let m = r as f64 - 4.0;
                    let e = m * sp.g_j * MU_B * b;
                    assert!((h[(r, c)].re - e).abs() < 1e-12 * MU_B * b);
                    assert_eq!(h[(r, c)].im, 0.0);
                } else {
                    assert_eq!(h[(r, c)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn hermitian_with_rf() {
        let s = spec(Vec3::new(1e-5, -3e-5, 2e-4), 3e-5);
        let h = build_hamiltonian(3.3e-6, &s);
        assert!((&h - h.adjoint()).iter().all(|c| c.norm() < 1e-40));
    }

    #[test]
    fn rotation_invariance_of_spectrum() {
        let b = 1.7e-4;
        let reference = sorted_eigenvalues(build_hamiltonian(0.0, &spec(Vec3::new(0.0, 0.0, b), 0.0)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let ev = sorted_eigenvalues(build_hamiltonian(0.0, &spec(d * b, 0.0)));
            for (a, r) in ev.iter().zip(&reference) {
                let scale = reference.last().unwrap().abs();
                assert!((a - r).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn envelope_ramps() {
        let e = RfEnvelope::EdgeRamped { fraction: 0.1 };
        assert_eq!(e.value(0.0), 0.0);
        assert!((e.value(0.1) - 1.0).abs() < 1e-15);
        assert_eq!(e.value(0.5), 1.0);
        assert!(e.value(1.0).abs() < 1e-15);
        assert_eq!(RfEnvelope::Constant.value(0.0), 1.0);
    }

    #[test]
    fn rotating_frame_matches_dense_operators() {
        let s = angular_momentum_matrices(1.5).unwrap();
        let h = RotatingFrameSweep {
            ladder: SpinLadder::new(3),
            omega: 2.0,
            detuning_rate: 3.0,
            t_center: 1.0,
        };
        let m = h.matrix(2.0);
        let expected = &s.jz * C64::new(3.0, 0.0) + &s.jx * C64::new(2.0, 0.0);
        assert!((m - expected).norm() < 1e-14);
    }
}
