use super::atom::{Atom, Traps};
use super::rng::{atom_stream, Stream};
use crate::constants::K_B;
use crate::error::{Error, Result};
use crate::field::{dipole_potential_and_force, quadrupole_field};
use crate::Vec3;
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialDistribution {
    /// Boltzmann distribution of the dipole plus m-dependent magnetic potential.
    MixedTrapThermal,
    /// Boltzmann distribution of the dipole potential alone.
    DipoleOnlyThermal,
}

impl InitialDistribution {
    pub fn as_str(self) -> &'static str {
        match self {
            InitialDistribution::MixedTrapThermal => "mixed_trap_thermal",
            InitialDistribution::DipoleOnlyThermal => "dipole_only_thermal",
        }
    }
}

impl std::str::FromStr for InitialDistribution {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mixed_trap_thermal" => Ok(InitialDistribution::MixedTrapThermal),
            "dipole_only_thermal" => Ok(InitialDistribution::DipoleOnlyThermal),
            _ => Err(format!(
                "unknown initial distribution {s:?} (expected mixed_trap_thermal or dipole_only_thermal)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MPolicy {
    /// m drawn uniformly from −J … J.
    AllSublevelsUniform,
    /// m > 0 only, drawn jointly with the position from the Boltzmann weight,
    /// so each sublevel is populated in proportion to its partition function.
    PositiveOnlyThermal,
}

impl MPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            MPolicy::AllSublevelsUniform => "all_sublevels_uniform",
            MPolicy::PositiveOnlyThermal => "positive_only_thermal",
        }
    }
}

impl std::str::FromStr for MPolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all_sublevels_uniform" => Ok(MPolicy::AllSublevelsUniform),
            "positive_only_thermal" => Ok(MPolicy::PositiveOnlyThermal),
            _ => Err(format!(
                "unknown m policy {s:?} (expected all_sublevels_uniform or positive_only_thermal)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_atoms: usize,
    /// K.
    pub temperature: f64,
    pub seed: u64,
    pub initial_distribution: InitialDistribution,
    pub m_policy: MPolicy,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_atoms: 2000,
            temperature: 100e-6,
            seed: 1,
            initial_distribution: InitialDistribution::DipoleOnlyThermal,
            m_policy: MPolicy::AllSublevelsUniform,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::config("ensemble needs at least one atom"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config("temperature must be positive"));
        }
        Ok(())
    }
}

const MAX_ATTEMPTS: u64 = 1_000_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

struct Sampler<'a> {
    traps: &'a Traps,
    mixed: bool,
    center: Vec3,
    half: Vec3,
}

impl Sampler<'_> {
    /// Box half-widths: 8σ of the harmonic dipole approximation, shrunk to
    /// a few magnetic 1/e lengths for a trapped sublevel `m` of the mixed
    /// trap, and never beyond the simulation box.
    fn half_widths(traps: &Traps, kt: f64, mixed: bool, m: i32) -> Vec3 {
        let mass = traps.species.mass;
        let (w_ax, w_rad) = traps.dipole.harmonic_frequencies(mass);
        let sigma = |w: f64| {
            if w > 0.0 {
                (kt / (mass * w * w)).sqrt()
            } else {
                f64::INFINITY
            }
        };
        let limit = traps.box_half_size * (1.0 - 1e-9);
        let mut ax = (8.0 * sigma(w_ax)).min(limit);
        let mut rad = (8.0 * sigma(w_rad)).min(limit);
        if mixed && m > 0 {
            let r0 = kt / (f64::from(m) * traps.moment() * traps.quadrupole.gradient_axial);
            ax = ax.min(20.0 * r0);
            rad = rad.min(40.0 * r0);
        }
        Vec3::new(ax, rad, rad)
    }

    fn potential(&self, r: &Vec3, m: i32) -> f64 {
        let (u, _) = dipole_potential_and_force(r, &self.traps.dipole);
        if self.mixed {
            u + f64::from(m) * self.traps.moment() * quadrupole_field(r, &self.traps.quadrupole).magnitude
        } else {
            u
        }
    }

    /// Lower bound of the potential of sublevel `m` over the box.
    fn lower_bound(&self, m: i32) -> f64 {
        let mut u = -self.traps.dipole.effective_depth();
        if self.mixed && m < 0 {
            let d = (self.center - self.traps.quadrupole.center).abs() + self.half;
            let b_max = self.traps.quadrupole.gradient_axial
                * (d.x * d.x + 0.25 * d.y * d.y + 0.25 * d.z * d.z).sqrt();
            u += f64::from(m) * self.traps.moment() * b_max;
        }
        u
    }
}

/// Draw `cfg.n_atoms` atoms from the Boltzmann distribution of the chosen
/// potential at temperature T.
///
/// Positions come from rejection sampling in a box around the dipole focus,
/// velocities from the Maxwell–Boltzmann distribution. Atom i uses its own
/// random stream, so the ensemble depends only on the seed.
pub fn sample_ensemble(cfg: &EnsembleConfig, traps: &Traps) -> Result<Vec<Atom>> {
    cfg.validate()?;
    traps.validate()?;
    let j = traps.species.integer_j()?;
    let kt = K_B * cfg.temperature;
    let mixed = cfg.initial_distribution == InitialDistribution::MixedTrapThermal;
    if j == 0 && cfg.m_policy == MPolicy::PositiveOnlyThermal {
        return Err(Error::domain("J = 0 has no positive sublevels"));
    }
    let mut sampler = Sampler {
        traps,
        mixed,
        center: traps.dipole.focus,
        half: Vec3::zeros(),
    };
    let velocity = Normal::new(0.0, (kt / traps.species.mass).sqrt())
        .map_err(|e| Error::Sampling(e.to_string()))?;
    let mut atoms = Vec::with_capacity(cfg.n_atoms);
    let (mut attempts, mut accepted) = (0u64, 0u64);
    for i in 0..cfg.n_atoms {
        let mut rng = atom_stream(cfg.seed, i, Stream::Sampling);
        let uniform_m = match cfg.m_policy {
            MPolicy::AllSublevelsUniform => Some(rng.random_range(-j..=j)),
            MPolicy::PositiveOnlyThermal => None,
        };
        // the positive-only policy draws m inside the loop; m = 1 has the widest box
        let box_m = uniform_m.unwrap_or(1);
        sampler.half = Sampler::half_widths(traps, kt, mixed, box_m);
        let floor = sampler.lower_bound(box_m);
        let mut tries = 0u64;
        let (r, m) = loop {
            tries += 1;
            if tries > MAX_ATTEMPTS {
                return Err(Error::Sampling(format!(
                    "no position accepted for atom {i} after {MAX_ATTEMPTS} draws; use a larger box or a lower temperature"
                )));
            }
            let m = uniform_m.unwrap_or_else(|| rng.random_range(1..=j));
            let r = sampler.center
                + Vec3::new(
                    rng.random_range(-1.0..=1.0) * sampler.half.x,
                    rng.random_range(-1.0..=1.0) * sampler.half.y,
                    rng.random_range(-1.0..=1.0) * sampler.half.z,
                );
            let w = (-(sampler.potential(&r, m) - floor) / kt).exp();
            if rng.random::<f64>() < w {
                break (r, m);
            }
        };
        attempts += tries;
        accepted += 1;
        let v = Vec3::new(
            velocity.sample(&mut rng),
            velocity.sample(&mut rng),
            velocity.sample(&mut rng),
        );
        atoms.push(Atom::new(r, v, m));
    }
    let acceptance = accepted as f64 / attempts as f64;
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::Sampling(format!(
            "rejection acceptance {acceptance:e} below {MIN_ACCEPTANCE:e}; use a larger box or a lower temperature"
        )));
    }
    Ok(atoms)
}
