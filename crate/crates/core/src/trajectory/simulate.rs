use super::atom::{check_escape, force_on_atom, local_resonance, verlet, Atom, Traps};
use super::flips::{apply_flip, local_detuning_rate, polarization_factor, FlipModel};
use super::rng::{atom_stream, Stream};
use crate::error::{Error, Result};
use crate::field::quadrupole_field;
use crate::sweep::RfSweepConfig;
use crate::Vec3;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub sweep: RfSweepConfig,
    pub flip: FlipModel,
    /// With the RF off atoms never change sublevel.
    pub rf_enabled: bool,
    /// s.
    pub duration: f64,
    /// Upper bound on the Verlet step; the default rule applies when `None`.
    pub dt_max: Option<f64>,
    /// Number of atoms (lowest indices) whose trajectories are recorded.
    pub record_atoms: usize,
    /// Time between recorded trajectory samples, s.
    pub record_interval: f64,
    /// Master seed of the per-atom dynamics streams.
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            sweep: RfSweepConfig::default(),
            flip: FlipModel::adiabatic(),
            rf_enabled: true,
            duration: 100e-3,
            dt_max: None,
            record_atoms: 0,
            record_interval: 1e-3,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossCause {
    /// Left the simulation box.
    BoxEscape,
    /// Unbound from the RF-averaged (dipole) potential.
    EnergyEscape,
    /// The trajectory became non-finite.
    IntegrationFailure,
}

impl LossCause {
    pub fn as_str(self) -> &'static str {
        match self {
            LossCause::BoxEscape => "box_escape",
            LossCause::EnergyEscape => "energy_escape",
            LossCause::IntegrationFailure => "integration_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub atom_id: usize,
    pub time: f64,
    pub cause: LossCause,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub atom_id: usize,
    pub r: Vec3,
    pub m_level: i32,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub n_atoms: usize,
    pub n_alive: usize,
    pub retained_fraction: f64,
    /// Standard deviation of the surviving positions about their mean, m.
    pub rms_extent: Vec3,
    /// Losses ordered by atom index.
    pub loss_log: Vec<LossRecord>,
    /// (t, fraction alive) on an even grid including both ends.
    pub retention_history: Vec<(f64, f64)>,
    pub trajectories: Option<Vec<TrajectorySample>>,
    pub final_atoms: Vec<Atom>,
    pub dt: f64,
    pub crossings: u64,
    pub integration_failures: usize,
}

/// Default Verlet step: t_S divided into an integer number of steps no
/// longer than min(t_S/50, 1 μs), and short enough that the fastest atom
/// moves less than a twentieth of the waist per step.
pub fn default_timestep(sweep: &RfSweepConfig, traps: &Traps, atoms: &[Atom]) -> f64 {
    let t_s = sweep.period();
    let v_fall = (2.0 * traps.dipole.effective_depth() / traps.species.mass).sqrt();
    let v_max = atoms.iter().map(|a| a.v.norm()).fold(0.0, f64::max) + v_fall;
    let mut dt_max = (t_s / 50.0).min(1e-6);
    if v_max > 0.0 {
        dt_max = dt_max.min(traps.dipole.waist / (20.0 * v_max));
    }
    t_s / (t_s / dt_max).ceil()
}

struct Outcome {
    atom: Atom,
    loss: Option<LossRecord>,
    samples: Vec<TrajectorySample>,
    crossings: u64,
}

struct Run<'a> {
    traps: &'a Traps,
    cfg: &'a SimulationConfig,
    j: i32,
    dt: f64,
    steps_per_period: u64,
    n_steps: u64,
    record_stride: u64,
}

impl Run<'_> {
    fn evolve(&self, id: usize, start: &Atom) -> Outcome {
        let sweep = &self.cfg.sweep;
        let traps = self.traps;
        let energy_escape = traps.energy_escape && self.cfg.rf_enabled;
        let mut rng = atom_stream(self.cfg.seed, id, Stream::Dynamics);
        let mut a = *start;
        let mut force = force_on_atom(&a, traps);
        let mut crossings = 0;
        let record = id < self.cfg.record_atoms;
        let mut samples = Vec::new();
        let sample = |a: &Atom, t: f64| TrajectorySample {
            t,
            atom_id: id,
            r: a.r,
            m_level: a.m_level,
            alive: a.alive,
        };
        if record {
            samples.push(sample(&a, 0.0));
        }
        let mut loss = None;
        for n in 0..self.n_steps {
            let t = n as f64 * self.dt;
            let before = a;
            let f_before = force;
            force = verlet(&mut a, force, self.dt, traps);
            if self.cfg.rf_enabled {
                let k = n % self.steps_per_period;
                let nu0 = sweep.frequency_in_period(k as f64 * self.dt);
                let nu1 = sweep.frequency_in_period((k + 1) as f64 * self.dt);
                let g0 = nu0 - local_resonance(&before.r, traps);
                let g1 = nu1 - local_resonance(&a.r, traps);
                if g0 * g1 < 0.0 {
                    crossings += 1;
                    // redo the step with the flip at the interpolated crossing time
                    let s = g0 / (g0 - g1);
                    a = before;
                    let f_mid = verlet(&mut a, f_before, s * self.dt, traps);
                    let rate = local_detuning_rate(&a, sweep, traps);
                    let field = quadrupole_field(&a.r, &traps.quadrupole).field;
                    let p_perp = polarization_factor(&field, &sweep.polarization_axis);
                    let m_old = a.m_level;
                    a = apply_flip(&a, &self.cfg.flip, rate, p_perp, self.j, &mut rng);
                    let f_mid = if a.m_level == m_old {
                        f_mid
                    } else {
                        force_on_atom(&a, traps)
                    };
                    force = verlet(&mut a, f_mid, (1.0 - s) * self.dt, traps);
                }
            }
            let t_end = t + self.dt;
            if !(a.r.iter().chain(a.v.iter()).all(|c| c.is_finite())) {
                a.alive = false;
                a.flags.escaped = true;
                loss = Some(LossRecord {
                    atom_id: id,
                    time: t_end,
                    cause: LossCause::IntegrationFailure,
                });
            } else if check_escape(&mut a, traps, energy_escape) {
                let cause = if traps.outside_box(&a.r) {
                    LossCause::BoxEscape
                } else {
                    LossCause::EnergyEscape
                };
                loss = Some(LossRecord {
                    atom_id: id,
                    time: t_end,
                    cause,
                });
            }
            if record && (loss.is_some() || (n + 1) % self.record_stride == 0) {
                samples.push(sample(&a, t_end));
            }
            if loss.is_some() {
                break;
            }
        }
        Outcome {
            atom: a,
            loss,
            samples,
            crossings,
        }
    }
}

/// Evolve every atom for `cfg.duration`, flipping sublevels at resonance
/// crossings.
///
/// Atoms are independent and each draws from its own random stream, so the
/// result does not depend on the number of worker threads.
pub fn simulate(atoms: &[Atom], traps: &Traps, cfg: &SimulationConfig) -> Result<SimulationResult> {
    traps.validate()?;
    cfg.sweep.validate()?;
    cfg.flip.validate()?;
    let j = traps.species.integer_j()?;
    if atoms.is_empty() {
        return Err(Error::domain("no atoms to simulate"));
    }
    if let Some(a) = atoms.iter().find(|a| a.m_level.abs() > j) {
        return Err(Error::domain(format!("sublevel {} outside [-J, J]", a.m_level)));
    }
    let t_s = cfg.sweep.period();
    if cfg.rf_enabled && cfg.duration < 2.0 * t_s * (1.0 - 1e-9) {
        return Err(Error::domain(format!(
            "duration {:e} s covers fewer than two sweep periods",
            cfg.duration
        )));
    }
    if !(cfg.duration > 0.0) {
        return Err(Error::domain("duration must be positive"));
    }
    let mut dt = default_timestep(&cfg.sweep, traps, atoms);
    if let Some(max) = cfg.dt_max {
        if !(max > 0.0) {
            return Err(Error::config("dt_max must be positive"));
        }
        if max < dt {
            dt = t_s / (t_s / max).ceil();
        }
    }
    let run = Run {
        traps,
        cfg,
        j,
        dt,
        steps_per_period: (t_s / dt).round() as u64,
        n_steps: (cfg.duration / dt).round() as u64,
        record_stride: ((cfg.record_interval / dt).round() as u64).max(1),
    };
    let outcomes: Vec<Outcome> = atoms
        .par_iter()
        .enumerate()
        .map(|(i, a)| run.evolve(i, a))
        .collect();

    let n = atoms.len();
    let survivors: Vec<&Atom> = outcomes.iter().map(|o| &o.atom).filter(|a| a.alive).collect();
    let n_alive = survivors.len();
    let mut rms_extent = Vec3::zeros();
    if n_alive > 0 {
        let mean = survivors.iter().fold(Vec3::zeros(), |s, a| s + a.r) / n_alive as f64;
        let var = survivors
            .iter()
            .fold(Vec3::zeros(), |s, a| s + (a.r - mean).component_mul(&(a.r - mean)))
            / n_alive as f64;
        rms_extent = var.map(f64::sqrt);
    }
    let loss_log: Vec<LossRecord> = outcomes.iter().filter_map(|o| o.loss).collect();
    let duration = run.n_steps as f64 * dt;
    let retention_history = (0..=100)
        .map(|k| {
            let t = duration * k as f64 / 100.0;
            let lost = loss_log.iter().filter(|l| l.time <= t).count();
            (t, (n - lost) as f64 / n as f64)
        })
        .collect();
    let trajectories = (cfg.record_atoms > 0).then(|| {
        outcomes
            .iter()
            .flat_map(|o| o.samples.iter().copied())
            .collect()
    });
    Ok(SimulationResult {
        n_atoms: n,
        n_alive,
        retained_fraction: n_alive as f64 / n as f64,
        rms_extent,
        integration_failures: loss_log
            .iter()
            .filter(|l| l.cause == LossCause::IntegrationFailure)
            .count(),
        loss_log,
        retention_history,
        trajectories,
        final_atoms: outcomes.iter().map(|o| o.atom).collect(),
        dt,
        crossings: outcomes.iter().map(|o| o.crossings).sum(),
    })
}

/// Scanned parameter of a [`retention_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    /// Grid values are sweep rates 1/t_S, Hz.
    SweepRate,
    /// Grid values are lab-frame Rabi frequencies Ω, rad/s; flips follow the
    /// Landau–Zener model at each Ω.
    RfPower,
}

impl ScanAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanAxis::SweepRate => "sweep_rate",
            ScanAxis::RfPower => "rf_power",
        }
    }
}

impl std::str::FromStr for ScanAxis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sweep_rate" => Ok(ScanAxis::SweepRate),
            "rf_power" => Ok(ScanAxis::RfPower),
            _ => Err(format!("unknown scan axis {s:?} (expected sweep_rate or rf_power)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub value: f64,
    pub retained_fraction: f64,
    /// Binomial standard error √(p(1 − p)/N).
    pub stderr: f64,
    pub n_atoms: usize,
}

/// One [`simulate`] per grid value, all from the same ensemble and seed.
pub fn retention_scan(
    axis: ScanAxis,
    grid: &[f64],
    atoms: &[Atom],
    traps: &Traps,
    base: &SimulationConfig,
) -> Result<Vec<ScanPoint>> {
    if grid.is_empty() {
        return Err(Error::domain("scan grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("scan grid must be strictly increasing"));
    }
    grid.iter()
        .map(|&value| {
            let mut cfg = *base;
            match axis {
                ScanAxis::SweepRate => cfg.sweep.sweep_rate = value,
                ScanAxis::RfPower => {
                    cfg.flip = FlipModel::landau_zener(value);
                    cfg.rf_enabled = true;
                }
            }
            let res = simulate(atoms, traps, &cfg)?;
            let p = res.retained_fraction;
            Ok(ScanPoint {
                value,
                retained_fraction: p,
                stderr: (p * (1.0 - p) / res.n_atoms as f64).sqrt(),
                n_atoms: res.n_atoms,
            })
        })
        .collect()
}
