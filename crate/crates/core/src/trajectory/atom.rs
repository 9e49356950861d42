use crate::constants::{H, MU_B};
use crate::error::{Error, Result};
use crate::field::{dipole_potential_and_force, quadrupole_field, DipoleTrapConfig, QuadrupoleFieldConfig};
use crate::species::SpeciesParams;
use crate::Vec3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AtomFlags {
    /// The atom entered the regularization radius around the field zero.
    pub crossed_zero_field: bool,
    pub escaped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub r: Vec3,
    pub v: Vec3,
    pub m_level: i32,
    pub alive: bool,
    pub flags: AtomFlags,
}

impl Atom {
    pub fn new(r: Vec3, v: Vec3, m_level: i32) -> Self {
        Atom {
            r,
            v,
            m_level,
            alive: true,
            flags: AtomFlags::default(),
        }
    }
}

/// The static potentials and the loss geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traps {
    pub species: SpeciesParams,
    pub quadrupole: QuadrupoleFieldConfig,
    pub dipole: DipoleTrapConfig,
    /// Half-size of the cubic simulation box around the quadrupole centre, m.
    pub box_half_size: f64,
    /// Also count an atom as lost when its kinetic plus dipole energy is
    /// positive, i.e. when it is unbound from the RF-averaged potential.
    /// Only applied while the RF is on.
    pub energy_escape: bool,
}

impl Default for Traps {
    fn default() -> Self {
        Traps {
            species: SpeciesParams::default(),
            quadrupole: QuadrupoleFieldConfig::default(),
            dipole: DipoleTrapConfig::default(),
            box_half_size: 5e-3,
            energy_escape: false,
        }
    }
}

impl Traps {
    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        self.species.integer_j()?;
        self.quadrupole.validate()?;
        self.dipole.validate()?;
        if !(self.box_half_size > 0.0) {
            return Err(Error::config("simulation box half-size must be positive"));
        }
        Ok(())
    }

    pub(crate) fn moment(&self) -> f64 {
        self.species.g_j * MU_B
    }

    pub(crate) fn outside_box(&self, r: &Vec3) -> bool {
        (r - self.quadrupole.center).amax() > self.box_half_size
    }
}

/// Force on one unit of m, −g_J μ_B ∇|B|, N.
pub fn magnetic_force_per_m(r: &Vec3, traps: &Traps) -> Vec3 {
    -traps.moment() * quadrupole_field(r, &traps.quadrupole).grad_magnitude
}

/// F = −∇(m g_J μ_B |B|) + F_dipole.
pub fn force_on_atom(a: &Atom, traps: &Traps) -> Vec3 {
    let (_, f_dip) = dipole_potential_and_force(&a.r, &traps.dipole);
    magnetic_force_per_m(&a.r, traps) * f64::from(a.m_level) + f_dip
}

/// m g_J μ_B |B| + U_dipole, J.
pub fn potential_energy(a: &Atom, traps: &Traps) -> f64 {
    let b = quadrupole_field(&a.r, &traps.quadrupole).magnitude;
    let (u, _) = dipole_potential_and_force(&a.r, &traps.dipole);
    f64::from(a.m_level) * traps.moment() * b + u
}

/// Local Δm = ±1 resonance frequency g_J μ_B |B(r)| / h, Hz.
pub fn local_resonance(r: &Vec3, traps: &Traps) -> f64 {
    traps.moment() * quadrupole_field(r, &traps.quadrupole).magnitude / H
}

/// One velocity-Verlet step with the current sublevel.
///
/// Marks the atom as escaped when it leaves the simulation box, or, with
/// `traps.energy_escape`, when it is unbound from the dipole potential.
pub fn step(a: &Atom, dt: f64, traps: &Traps) -> Atom {
    let mut out = *a;
    if !a.alive {
        return out;
    }
    let f0 = force_on_atom(a, traps);
    verlet(&mut out, f0, dt, traps);
    check_escape(&mut out, traps, traps.energy_escape);
    out
}

/// Verlet update given the force at the start; returns the force at the end.
pub(crate) fn verlet(a: &mut Atom, f0: Vec3, dt: f64, traps: &Traps) -> Vec3 {
    let inv_m = 1.0 / traps.species.mass;
    let v_half = a.v + f0 * (0.5 * dt * inv_m);
    a.r += v_half * dt;
    let f1 = force_on_atom(a, traps);
    a.v = v_half + f1 * (0.5 * dt * inv_m);
    if quadrupole_field(&a.r, &traps.quadrupole).regularized {
        a.flags.crossed_zero_field = true;
    }
    f1
}

pub(crate) fn check_escape(a: &mut Atom, traps: &Traps, energy_escape: bool) -> bool {
    let unbound = energy_escape && {
        let (u, _) = dipole_potential_and_force(&a.r, &traps.dipole);
        0.5 * traps.species.mass * a.v.norm_squared() + u > 0.0
    };
    if traps.outside_box(&a.r) || unbound {
        a.alive = false;
        a.flags.escaped = true;
        true
    } else {
        false
    }
}
