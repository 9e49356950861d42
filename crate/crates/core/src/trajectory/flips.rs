use super::atom::{local_resonance, magnetic_force_per_m, step, Atom, Traps};
use crate::constants::H;
use crate::error::{Error, Result};
use crate::field::{dipole_potential_and_force, quadrupole_field};
use crate::quantum::{lz_transition_probabilities, lz_two_level};
use crate::sweep::RfSweepConfig;
use crate::Vec3;
use rand::Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipMode {
    /// Every crossing maps m → −m.
    AdiabaticFullFlip,
    /// Every crossing draws the new m from the spin-J Landau–Zener
    /// distribution.
    LzProbabilistic,
}

impl FlipMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FlipMode::AdiabaticFullFlip => "adiabatic_full_flip",
            FlipMode::LzProbabilistic => "lz_probabilistic",
        }
    }
}

impl std::str::FromStr for FlipMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "adiabatic_full_flip" => Ok(FlipMode::AdiabaticFullFlip),
            "lz_probabilistic" => Ok(FlipMode::LzProbabilistic),
            _ => Err(format!(
                "unknown flip mode {s:?} (expected adiabatic_full_flip or lz_probabilistic)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipModel {
    pub mode: FlipMode,
    /// Lab-frame Rabi angular frequency g_J μ_B b_rf / ħ, rad/s.
    pub omega: f64,
}

impl FlipModel {
    pub fn adiabatic() -> Self {
        FlipModel {
            mode: FlipMode::AdiabaticFullFlip,
            omega: 0.0,
        }
    }

    pub fn landau_zener(omega: f64) -> Self {
        FlipModel {
            mode: FlipMode::LzProbabilistic,
            omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::config("Rabi frequency must be non-negative"));
        }
        Ok(())
    }

    /// Two-level diabatic probability at a crossing with detuning rate
    /// `rate` and polarization factor `p_perp`.
    fn survival(&self, rate: f64, p_perp: f64) -> f64 {
        if self.omega == 0.0 || p_perp == 0.0 {
            return 1.0;
        }
        lz_two_level(0.5 * self.omega * p_perp, rate.max(f64::MIN_POSITIVE)).unwrap_or(1.0)
    }
}

/// |ê × b̂|: the fraction of a linearly polarized RF amplitude that drives
/// Δm = ±1 transitions about the local field. Zero at the field zero.
pub fn polarization_factor(field: &Vec3, polarization: &Vec3) -> f64 {
    let b = field.norm();
    if b == 0.0 {
        0.0
    } else {
        polarization.cross(&(field / b)).norm()
    }
}

/// |d(ω_rf − ω_res)/dt| seen by a moving atom, rad/s².
pub fn local_detuning_rate(a: &Atom, sweep: &RfSweepConfig, traps: &Traps) -> f64 {
    let grad = quadrupole_field(&a.r, &traps.quadrupole).grad_magnitude;
    let resonance_drift = traps.moment() / H * grad.dot(&a.v);
    2.0 * PI * (sweep.ramp_slope() - resonance_drift).abs()
}

/// Sublevel after a resonance crossing.
///
/// In Landau–Zener mode the two-level coupling is Ω p⊥/2, the rotating
/// component of the linear RF perpendicular to the local field, and the new
/// m is drawn from |d^J_{m′m}(β)|² with cos²(β/2) = q.
pub fn apply_flip<R: Rng + ?Sized>(
    a: &Atom,
    model: &FlipModel,
    local_rate: f64,
    p_perp: f64,
    j: i32,
    rng: &mut R,
) -> Atom {
    let mut out = *a;
    match model.mode {
        FlipMode::AdiabaticFullFlip => out.m_level = -a.m_level,
        FlipMode::LzProbabilistic => {
            let q = model.survival(local_rate, p_perp);
            if q < 1.0 {
                let probs = lz_transition_probabilities(2 * j as u32, 2 * a.m_level, q)
                    .expect("sublevel and probability are in range");
                let u: f64 = rng.random();
                let mut acc = 0.0;
                out.m_level = j;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        out.m_level = k as i32 - j;
                        break;
                    }
                }
            }
        }
    }
    out
}

/// ν(t) with the left limit at period boundaries, so that the flyback of
/// the seesaw is never mistaken for a crossing.
fn frequency(sweep: &RfSweepConfig, t: f64, left: bool) -> f64 {
    let (k, tau) = sweep.period_split(t);
    if left && k > 0 && tau <= 1e-12 * sweep.period() {
        sweep.frequency_in_period(sweep.period())
    } else {
        sweep.frequency_in_period(tau)
    }
}

/// Times in [t0, t1] where the sweep frequency passes the local resonance of
/// the atom, located by sign changes on a trajectory sampled every `dt` (the
/// atom keeps its sublevel) and refined by linear interpolation.
pub fn resonance_crossings(
    a: &Atom,
    sweep: &RfSweepConfig,
    traps: &Traps,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(t1 > t0) || t1 - t0 > sweep.period() * (1.0 + 1e-12) || !(dt > 0.0) {
        return Err(Error::domain(
            "crossing search needs t0 < t1 ≤ t0 + t_S and a positive step",
        ));
    }
    let n = ((t1 - t0) / dt).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let mut atom = *a;
    let mut out = Vec::new();
    for i in 0..n {
        let ta = t0 + i as f64 * h;
        let tb = if i + 1 == n { t1 } else { ta + h };
        let ga = frequency(sweep, ta, false) - local_resonance(&atom.r, traps);
        // a period boundary inside the step: split at it
        let (ka, _) = sweep.period_split(ta);
        let boundary = (ka + 1) as f64 * sweep.period();
        let next = step(&atom, tb - ta, traps);
        let gb_end = frequency(sweep, tb, true) - local_resonance(&next.r, traps);
        if boundary < tb - 1e-12 * sweep.period() {
            let s = (boundary - ta) / (tb - ta);
            let r_mid = atom.r + (next.r - atom.r) * s;
            let g_left = frequency(sweep, boundary, true) - local_resonance(&r_mid, traps);
            let g_right = frequency(sweep, boundary, false) - local_resonance(&r_mid, traps);
            push_root(&mut out, ta, boundary, ga, g_left);
            push_root(&mut out, boundary, tb, g_right, gb_end);
        } else {
            push_root(&mut out, ta, tb, ga, gb_end);
        }
        atom = next;
    }
    Ok(out)
}

fn push_root(out: &mut Vec<f64>, ta: f64, tb: f64, ga: f64, gb: f64) {
    if ga == 0.0 {
        if out.last().is_none_or(|&t| t < ta) {
            out.push(ta);
        }
    } else if ga * gb < 0.0 {
        out.push(ta + (tb - ta) * ga / (ga - gb));
    }
}

/// Period-averaged force on an atom held at `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedForce {
    pub total: Vec3,
    pub magnetic: Vec3,
    pub dipole: Vec3,
    /// Magnetic force of the initial sublevel without RF.
    pub instantaneous_magnetic: Vec3,
    /// Time-averaged expectation of m.
    pub mean_m: f64,
    /// Fraction of each period spent before the crossing, if there is one.
    pub crossing_fraction: Option<f64>,
}

/// Average of [`force_on_atom`](super::force_on_atom) over `periods` sweep
/// periods for an atom held at `r`, starting in sublevel `m0`, with the
/// sublevel updated at every resonance crossing.
///
/// The sublevel is tracked as its expectation value, which is exact because
/// the force is linear in m: a Landau–Zener crossing with diabatic
/// probability q maps ⟨m⟩ to (2q − 1)⟨m⟩.
pub fn time_averaged_force(
    r: &Vec3,
    sweep: &RfSweepConfig,
    model: &FlipModel,
    traps: &Traps,
    m0: i32,
    periods: usize,
) -> Result<AveragedForce> {
    sweep.validate()?;
    model.validate()?;
    traps.validate()?;
    let j = traps.species.integer_j()?;
    if m0.abs() > j || periods == 0 {
        return Err(Error::domain("need |m0| ≤ J and at least one period"));
    }
    let f1 = magnetic_force_per_m(r, traps);
    let (_, dipole) = dipole_potential_and_force(r, &traps.dipole);
    let nu_res = local_resonance(r, traps);
    let field = quadrupole_field(r, &traps.quadrupole).field;
    let factor = match model.mode {
        FlipMode::AdiabaticFullFlip => -1.0,
        FlipMode::LzProbabilistic => {
            let rate = 2.0 * PI * sweep.ramp_slope().abs();
            2.0 * model.survival(rate, polarization_factor(&field, &sweep.polarization_axis)) - 1.0
        }
    };
    // sample each period on a fine grid and split the sample containing the
    // crossing at the interpolated crossing time
    const SAMPLES: usize = 1000;
    let t_s = sweep.period();
    let h = t_s / SAMPLES as f64;
    let mut m = f64::from(m0);
    let mut m_time = 0.0;
    let mut crossing_fraction = None;
    for _ in 0..periods {
        for i in 0..SAMPLES {
            let ga = sweep.frequency_in_period(i as f64 * h) - nu_res;
            let gb = sweep.frequency_in_period((i + 1) as f64 * h) - nu_res;
            if ga * gb < 0.0 || (ga == 0.0 && gb != 0.0) {
                let s = ga / (ga - gb);
                crossing_fraction = Some((i as f64 + s) / SAMPLES as f64);
                m_time += m * s * h;
                m *= factor;
                m_time += m * (1.0 - s) * h;
            } else {
                m_time += m * h;
            }
        }
    }
    let mean_m = m_time / (periods as f64 * t_s);
    let magnetic = f1 * mean_m;
    Ok(AveragedForce {
        total: magnetic + dipole,
        magnetic,
        dipole,
        instantaneous_magnetic: f1 * f64::from(m0),
        mean_m,
        crossing_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_for_resonance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn atom_at_resonance(nu: f64, traps: &Traps) -> Atom {
        let x = field_for_resonance(nu, &traps.species) / traps.quadrupole.gradient_axial;
        Atom::new(Vec3::new(x, 0.0, 0.0), Vec3::zeros(), 2)
    }

    #[test]
    fn adiabatic_flip_negates() {
        let a = Atom::new(Vec3::zeros(), Vec3::zeros(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = apply_flip(&a, &FlipModel::adiabatic(), 1e12, 1.0, 4, &mut rng);
        assert_eq!(b.m_level, -3);
    }

    #[test]
    fn lz_without_coupling_keeps_m() {
        let a = Atom::new(Vec3::zeros(), Vec3::zeros(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let b = apply_flip(&a, &FlipModel::landau_zener(0.0), 4e11, 1.0, 4, &mut rng);
            assert_eq!(b.m_level, 3);
        }
    }

    #[test]
    fn strong_coupling_flips_fully() {
        let rate = 2.0 * PI * 6.5e6 / 100e-6;
        let omega = 2.0 * PI * 2e6;
        let model = FlipModel::landau_zener(omega);
        let a = Atom::new(Vec3::zeros(), Vec3::zeros(), 4);
        // P(−m0) from the binomial distribution
        let q = lz_two_level(0.5 * omega, rate).unwrap();
        assert!((1.0 - q).powi(8) > 0.99);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 2000;
        let flipped = (0..n)
            .filter(|_| apply_flip(&a, &model, rate, 1.0, 4, &mut rng).m_level == -4)
            .count();
        assert!(flipped as f64 / n as f64 > 0.99);
    }

    #[test]
    fn lz_sampling_follows_distribution() {
        let rate = 1e12;
        let omega = 2.0 * (2.0 * 2f64.ln() * rate / PI).sqrt(); // q = 1/2
        let model = FlipModel::landau_zener(omega);
        let a = Atom::new(Vec3::zeros(), Vec3::zeros(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20000;
        let mut counts = [0usize; 9];
        for _ in 0..n {
            counts[(apply_flip(&a, &model, rate, 1.0, 4, &mut rng).m_level + 4) as usize] += 1;
        }
        let p = lz_transition_probabilities(8, 8, 0.5).unwrap();
        for k in 0..9 {
            let expect = p[k] * n as f64;
            assert!((counts[k] as f64 - expect).abs() < 4.0 * expect.sqrt() + 1.0);
        }
    }

    #[test]
    fn one_crossing_per_period_at_ramp_inversion() {
        let traps = Traps::default();
        let sweep = RfSweepConfig::default();
        let a = atom_at_resonance(3e6, &traps);
        let dt = 1e-6;
        for k in 0..3 {
            let t0 = k as f64 * sweep.period();
            let c = resonance_crossings(&a, &sweep, &traps, t0, t0 + sweep.period(), dt).unwrap();
            assert_eq!(c.len(), 1, "{c:?}");
            let expect = t0 + sweep.time_of_frequency(3e6).unwrap();
            assert!((c[0] - expect).abs() < dt, "{} vs {expect}", c[0]);
        }
    }

    #[test]
    fn no_crossing_above_band() {
        let traps = Traps::default();
        let sweep = RfSweepConfig::default();
        let a = atom_at_resonance(9e6, &traps);
        let c = resonance_crossings(&a, &sweep, &traps, 0.0, sweep.period(), 1e-6).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn period_boundary_inside_window_is_not_a_crossing() {
        let traps = Traps::default();
        let sweep = RfSweepConfig::default();
        let a = atom_at_resonance(3e6, &traps);
        let t0 = 0.7 * sweep.period();
        let c = resonance_crossings(&a, &sweep, &traps, t0, t0 + sweep.period(), 1e-6).unwrap();
        assert_eq!(c.len(), 1, "{c:?}");
        let expect = sweep.period() + sweep.time_of_frequency(3e6).unwrap();
        assert!((c[0] - expect).abs() < 1e-6);
    }

    #[test]
    fn zero_field_point_has_no_magnetic_average() {
        let traps = Traps::default();
        let f = time_averaged_force(&Vec3::zeros(), &RfSweepConfig::default(), &FlipModel::adiabatic(), &traps, 2, 4)
            .unwrap();
        assert_eq!(f.magnetic, Vec3::zeros());
    }

    #[test]
    fn duty_cycle_bound() {
        let traps = Traps::default();
        let sweep = RfSweepConfig::default();
        let a = atom_at_resonance(3.75e6, &traps);
        for periods in [1, 2, 3, 10] {
            let f = time_averaged_force(&a.r, &sweep, &FlipModel::adiabatic(), &traps, 2, periods).unwrap();
            let tc = sweep.time_of_frequency(3.75e6).unwrap() / sweep.period();
            // one unpaired period contributes (2 tc − 1) of the single-m force
            let asym = (2.0 * tc - 1.0).abs() / periods as f64;
            assert!(f.magnetic.norm() <= 2.0 * asym * f.instantaneous_magnetic.norm() + 1e-12 * f.instantaneous_magnetic.norm());
            assert!((f.crossing_fraction.unwrap() - tc).abs() < 1e-9);
        }
    }
}
