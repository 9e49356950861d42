//! Run configuration: an INI-style file of `key = value` lines grouped in
//! `[section]`s, with every physical quantity carrying a unit suffix.
//!
//! Unknown sections and keys are errors. Missing keys take the default
//! parameter set, so an empty file is a complete configuration.
//! [`RunConfig::serialize`] writes every resolved value in SI units; parsing
//! that text gives back the same configuration bit for bit.

use rfsweep::field::{
    field_for_resonance, gaussian_rayleigh_length, rf_amplitude_for_rabi, DipoleTrapConfig,
    QuadrupoleFieldConfig,
};
use rfsweep::loading::LoadingParams;
use rfsweep::species::SpeciesParams;
use rfsweep::sweep::{RfSweepConfig, SweepShape};
use rfsweep::trajectory::{EnsembleConfig, FlipMode, InitialDistribution, MPolicy, ScanAxis};
use rfsweep::units::{format_si, parse_quantity, Dimension};
use rfsweep::Vec3;
use std::cell::Cell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config line {line}, key `{key}`: {message}")]
pub struct ConfigError {
    /// 1-based line number; 0 when the value came from the defaults.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    pub duration: f64,
    /// `None` selects the default step rule.
    pub dt_max: Option<f64>,
    pub rf_enabled: bool,
    pub flip_mode: FlipMode,
    pub record_atoms: usize,
    pub record_interval: f64,
    pub box_half_size: f64,
    pub energy_escape: bool,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            duration: 0.1,
            dt_max: None,
            rf_enabled: true,
            flip_mode: FlipMode::AdiabaticFullFlip,
            record_atoms: 10,
            record_interval: 1e-3,
            box_half_size: 5e-3,
            energy_escape: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    pub axis: ScanAxis,
    /// Sweep rates in Hz, or Rabi frequencies Ω/2π in Hz for the rf_power axis.
    pub values: Vec<f64>,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            axis: ScanAxis::SweepRate,
            values: vec![50.0, 100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 1e4, 2e4],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSettings {
    pub alpha: f64,
}

impl Default for DesignSettings {
    fn default() -> Self {
        DesignSettings { alpha: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub threshold: f64,
    /// Local resonance ν0 at the centre of every calibration band, Hz.
    pub resonance: f64,
    pub delta_nu: Vec<f64>,
    pub sweep_period: Vec<f64>,
    pub tolerance: f64,
    pub relative_precision: f64,
    pub ramp_fraction: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            threshold: 0.99,
            resonance: 6e6,
            delta_nu: vec![2e6, 6.5e6, 10e6],
            sweep_period: vec![50e-6, 100e-6, 200e-6],
            tolerance: 1e-8,
            relative_precision: 2e-3,
            ramp_fraction: 0.1,
        }
    }
}

impl CalibrationSettings {
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let mut g = Vec::new();
        for &d in &self.delta_nu {
            for &t in &self.sweep_period {
                g.push((d, t));
            }
        }
        g
    }

    pub fn b_local(&self, sp: &SpeciesParams) -> f64 {
        field_for_resonance(self.resonance, sp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LzSettings {
    /// Two-level Rabi frequencies Ω/2π, Hz.
    pub rabi: Vec<f64>,
    /// Half-width of the integration window in units of Ω.
    pub window: f64,
    pub tolerance: f64,
}

impl Default for LzSettings {
    fn default() -> Self {
        LzSettings {
            rabi: (1..=10).map(|i| 15e3 * i as f64).collect(),
            window: 50.0,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedSettings {
    /// Ω/2π, Hz.
    pub rabi: f64,
    /// δ/2π range, Hz.
    pub detuning_min: f64,
    pub detuning_max: f64,
    pub points: usize,
}

impl Default for DressedSettings {
    fn default() -> Self {
        DressedSettings {
            rabi: 510e3,
            detuning_min: -3e6,
            detuning_max: 3e6,
            points: 121,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedForceSettings {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub m0: i32,
    pub periods: usize,
}

impl Default for AveragedForceSettings {
    fn default() -> Self {
        AveragedForceSettings {
            x_min: 0.1e-3,
            x_max: 3e-3,
            points: 30,
            m0: 4,
            periods: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadingSettings {
    pub params: LoadingParams,
    pub duration: f64,
    pub points: usize,
}

impl Default for LoadingSettings {
    fn default() -> Self {
        LoadingSettings {
            params: LoadingParams::default(),
            duration: 1.2,
            points: 241,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub species: SpeciesParams,
    pub quadrupole: QuadrupoleFieldConfig,
    pub dipole: DipoleTrapConfig,
    pub sweep: RfSweepConfig,
    /// The seed of the ensemble is taken from [`RunConfig::seed`].
    pub ensemble: EnsembleConfig,
    pub simulation: SimulationSettings,
    pub scan: ScanSettings,
    pub design: DesignSettings,
    pub calibration: CalibrationSettings,
    pub lz: LzSettings,
    pub dressed: DressedSettings,
    pub averaged_force: AveragedForceSettings,
    pub loading: LoadingSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out: PathBuf::from("out"),
            species: SpeciesParams::chromium_5d4(),
            quadrupole: QuadrupoleFieldConfig::default(),
            dipole: DipoleTrapConfig::default(),
            sweep: RfSweepConfig::default(),
            ensemble: EnsembleConfig::default(),
            simulation: SimulationSettings::default(),
            scan: ScanSettings::default(),
            design: DesignSettings::default(),
            calibration: CalibrationSettings::default(),
            lz: LzSettings::default(),
            dressed: DressedSettings::default(),
            averaged_force: AveragedForceSettings::default(),
            loading: LoadingSettings::default(),
        }
    }
}

struct Entry {
    value: String,
    line: usize,
    used: Cell<bool>,
}

struct Section {
    name: String,
    entries: BTreeMap<String, Entry>,
}

const SECTIONS: [&str; 14] = [
    "run",
    "species",
    "quadrupole",
    "dipole",
    "sweep",
    "ensemble",
    "simulation",
    "scan",
    "design",
    "calibration",
    "lz",
    "dressed",
    "averaged_force",
    "loading",
];

fn tokenize(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(line, s, "unterminated section header"))?
                .trim()
                .to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ConfigError::new(line, &name, "unknown section"));
            }
            if sections.contains_key(&name) {
                return Err(ConfigError::new(line, &name, "section appears twice"));
            }
            sections.insert(
                name.clone(),
                Section {
                    name: name.clone(),
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, s, "expected `key = value`"))?;
        let key = key.trim();
        let section = current
            .as_ref()
            .ok_or_else(|| ConfigError::new(line, key, "key outside of any [section]"))?;
        let sec = sections.get_mut(section).expect("section was inserted");
        if sec.entries.contains_key(key) {
            return Err(ConfigError::new(line, key, "key appears twice"));
        }
        sec.entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                line,
                used: Cell::new(false),
            },
        );
    }
    Ok(sections)
}

/// Typed access to one section; records which keys were read.
struct Reader<'a> {
    sec: Option<&'a Section>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        let e = self.sec?.entries.get(key)?;
        e.used.set(true);
        Some((e.value.as_str(), e.line))
    }

    fn line(&self, key: &str) -> usize {
        self.sec
            .and_then(|s| s.entries.get(key))
            .map_or(0, |e| e.line)
    }

    fn get<T>(
        &self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => parse(v).map_err(|m| ConfigError::new(line, key, m)),
        }
    }

    fn quantity(&self, key: &str, dim: Dimension, default: f64) -> Result<f64, ConfigError> {
        self.get(key, default, |v| parse_quantity(v, dim).map_err(|e| e.to_string()))
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(key, default, |v| {
            v.parse::<f64>()
                .map_err(|_| format!("expected a dimensionless number, got {v:?}"))
        })
    }

    fn integer<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        self.get(key, default, |v| {
            v.parse::<T>().map_err(|_| format!("expected an integer, got {v:?}"))
        })
    }

    fn boolean(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        self.get(key, default, |v| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("expected true or false, got {v:?}")),
        })
    }

    fn choice<T: FromStr<Err = String>>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        self.get(key, default, |v| v.parse::<T>())
    }

    fn list(&self, key: &str, dim: Option<Dimension>, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
        self.get(key, default, |v| parse_list(v, dim))
    }

    fn vector(&self, key: &str, dim: Option<Dimension>, default: Vec3) -> Result<Vec3, ConfigError> {
        self.get(key, default, |v| {
            let c = parse_list(v, dim)?;
            if c.len() != 3 {
                return Err(format!("expected three components, got {}", c.len()));
            }
            Ok(Vec3::new(c[0], c[1], c[2]))
        })
    }
}

/// `"a, b, c unit"`: comma-separated numbers sharing the unit written after
/// the last one. Dimensionless lists carry no unit.
fn parse_list(text: &str, dim: Option<Dimension>) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("empty element in list {text:?}"));
    }
    let last = parts[parts.len() - 1];
    let Some(dim) = dim else {
        return parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| format!("cannot parse number {p:?}")))
            .collect();
    };
    if parts.len() == 1 {
        return parse_quantity(last, dim).map(|v| vec![v]).map_err(|e| e.to_string());
    }
    let (num, unit) = last
        .rsplit_once(char::is_whitespace)
        .map(|(n, u)| (n.trim(), u.trim()))
        .ok_or_else(|| format!("missing unit after the last value in {text:?} (expected {})", dim.si_unit()))?;
    let factor = parse_quantity(&format!("1 {unit}"), dim).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(parts.len());
    for p in parts[..parts.len() - 1].iter().chain(std::iter::once(&num)) {
        let v: f64 = p.parse().map_err(|_| format!("cannot parse number {p:?}"))?;
        out.push(v * factor);
    }
    Ok(out)
}

fn fmt_list(values: &[f64], dim: Option<Dimension>) -> String {
    let mut s = values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(", ");
    if let Some(d) = dim {
        s.push(' ');
        s.push_str(d.si_unit());
    }
    s
}

fn fmt_vec(v: &Vec3, dim: Option<Dimension>) -> String {
    fmt_list(&[v.x, v.y, v.z], dim)
}

fn positive(r: &Reader, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(r.line(key), key, format!("must be positive, got {v:e}")))
    }
}

fn non_negative(r: &Reader, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(r.line(key), key, format!("must be non-negative, got {v:e}")))
    }
}

fn at_least(r: &Reader, key: &str, v: usize, min: usize) -> Result<usize, ConfigError> {
    if v >= min {
        Ok(v)
    } else {
        Err(ConfigError::new(r.line(key), key, format!("must be at least {min}, got {v}")))
    }
}

fn increasing(r: &Reader, key: &str, v: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    if v.is_empty() || v.windows(2).any(|w| !(w[0] < w[1])) || v.iter().any(|x| !x.is_finite()) {
        return Err(ConfigError::new(r.line(key), key, "must be a non-empty, strictly increasing list"));
    }
    Ok(v)
}

/// Parse and validate a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let sections = tokenize(text)?;
    let reader = |name: &str| Reader {
        sec: sections.get(name),
    };
    let d = RunConfig::default();

    let r = reader("run");
    let seed = r.integer("seed", d.seed)?;
    let out = r.get("out", d.out.clone(), |v| {
        if v.is_empty() {
            Err("output directory must not be empty".into())
        } else {
            Ok(PathBuf::from(v))
        }
    })?;

    let r = reader("species");
    let species = SpeciesParams {
        j: r.number("j", d.species.j)?,
        g_j: r.number("g_j", d.species.g_j)?,
        mass: r.quantity("mass", Dimension::Mass, d.species.mass)?,
    };
    species
        .validate()
        .map_err(|e| ConfigError::new(r.line("j"), "j", e.to_string()))?;

    let r = reader("quadrupole");
    let quadrupole = QuadrupoleFieldConfig {
        gradient_axial: positive(
            &r,
            "gradient",
            r.quantity("gradient", Dimension::FieldGradient, d.quadrupole.gradient_axial)?,
        )?,
        center: r.vector("center", Some(Dimension::Length), d.quadrupole.center)?,
        regularization_radius: non_negative(
            &r,
            "regularization_radius",
            r.quantity(
                "regularization_radius",
                Dimension::Length,
                d.quadrupole.regularization_radius,
            )?,
        )?,
    };

    let r = reader("dipole");
    let waist = positive(&r, "waist", r.quantity("waist", Dimension::Length, d.dipole.waist)?)?;
    let wavelength = positive(
        &r,
        "wavelength",
        r.quantity("wavelength", Dimension::Length, d.dipole.wavelength)?,
    )?;
    let rayleigh_length = r.get("rayleigh_length", d.dipole.rayleigh_length, |v| {
        if v == "gaussian" {
            Ok(gaussian_rayleigh_length(waist, wavelength))
        } else {
            parse_quantity(v, Dimension::Length).map_err(|e| e.to_string())
        }
    })?;
    let dipole = DipoleTrapConfig {
        power: non_negative(&r, "power", r.quantity("power", Dimension::Power, d.dipole.power)?)?,
        waist,
        wavelength,
        rayleigh_length: positive(&r, "rayleigh_length", rayleigh_length)?,
        trap_depth: non_negative(
            &r,
            "trap_depth",
            r.quantity("trap_depth", Dimension::Energy, d.dipole.trap_depth)?,
        )?,
        retro_reflected: r.boolean("retro_reflected", d.dipole.retro_reflected)?,
        focus: r.vector("focus", Some(Dimension::Length), d.dipole.focus)?,
    };

    let r = reader("sweep");
    let nu_min = positive(&r, "nu_min", r.quantity("nu_min", Dimension::Frequency, d.sweep.nu_min)?)?;
    let nu_max = r.quantity("nu_max", Dimension::Frequency, d.sweep.nu_max)?;
    if !(nu_max > nu_min && nu_max.is_finite()) {
        let key = if r.line("nu_max") > 0 || r.line("nu_min") == 0 {
            "nu_max"
        } else {
            "nu_min"
        };
        return Err(ConfigError::new(
            r.line(key),
            key,
            format!("nu_max ({nu_max:e} Hz) must exceed nu_min ({nu_min:e} Hz)"),
        ));
    }
    let b_rf = r.quantity("b_rf", Dimension::MagneticField, d.sweep.b_rf)?;
    let b_rf = match r.raw("rabi") {
        None => b_rf,
        Some((_, line)) if r.line("b_rf") > 0 => {
            return Err(ConfigError::new(line, "rabi", "give either b_rf or rabi, not both"))
        }
        Some(_) => {
            let f = non_negative(&r, "rabi", r.quantity("rabi", Dimension::Frequency, 0.0)?)?;
            rf_amplitude_for_rabi(2.0 * PI * f, &species)
        }
    };
    let mut pol = r.vector("polarization", None, d.sweep.polarization_axis)?;
    let n = pol.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(ConfigError::new(r.line("polarization"), "polarization", "must be a non-zero vector"));
    }
    if (n - 1.0).abs() > 1e-12 {
        pol /= n;
    }
    let phase_reset_seed = r.get("phase_reset_seed", d.sweep.phase_reset_seed, |v| {
        if v == "none" {
            Ok(None)
        } else {
            v.parse::<u64>()
                .map(Some)
                .map_err(|_| format!("expected `none` or an integer, got {v:?}"))
        }
    })?;
    let sweep = RfSweepConfig {
        nu_min,
        nu_max,
        sweep_rate: positive(
            &r,
            "sweep_rate",
            r.quantity("sweep_rate", Dimension::Frequency, d.sweep.sweep_rate)?,
        )?,
        shape: r.choice::<SweepShape>("shape", d.sweep.shape)?,
        b_rf: non_negative(&r, "b_rf", b_rf)?,
        polarization_axis: pol,
        phase_reset_seed,
    };

    let r = reader("ensemble");
    let ensemble = EnsembleConfig {
        n_atoms: at_least(&r, "n_atoms", r.integer("n_atoms", d.ensemble.n_atoms)?, 1)?,
        temperature: positive(
            &r,
            "temperature",
            r.quantity("temperature", Dimension::Temperature, d.ensemble.temperature)?,
        )?,
        seed,
        initial_distribution: r.choice::<InitialDistribution>(
            "initial_distribution",
            d.ensemble.initial_distribution,
        )?,
        m_policy: r.choice::<MPolicy>("m_policy", d.ensemble.m_policy)?,
    };

    let r = reader("simulation");
    let ds = &d.simulation;
    let dt_max = r.get("dt", ds.dt_max, |v| {
        if v == "auto" {
            Ok(None)
        } else {
            parse_quantity(v, Dimension::Time).map(Some).map_err(|e| e.to_string())
        }
    })?;
    if let Some(dt) = dt_max {
        positive(&r, "dt", dt)?;
    }
    let simulation = SimulationSettings {
        duration: positive(&r, "duration", r.quantity("duration", Dimension::Time, ds.duration)?)?,
        dt_max,
        rf_enabled: r.boolean("rf_enabled", ds.rf_enabled)?,
        flip_mode: r.choice::<FlipMode>("flip_model", ds.flip_mode)?,
        record_atoms: r.integer("record_atoms", ds.record_atoms)?,
        record_interval: positive(
            &r,
            "record_interval",
            r.quantity("record_interval", Dimension::Time, ds.record_interval)?,
        )?,
        box_half_size: positive(
            &r,
            "box_half_size",
            r.quantity("box_half_size", Dimension::Length, ds.box_half_size)?,
        )?,
        energy_escape: r.boolean("energy_escape", ds.energy_escape)?,
    };

    let r = reader("scan");
    let scan = ScanSettings {
        axis: r.choice::<ScanAxis>("axis", d.scan.axis)?,
        values: increasing(&r, "values", r.list("values", Some(Dimension::Frequency), d.scan.values.clone())?)?,
    };
    if scan.axis == ScanAxis::SweepRate {
        positive(&r, "values", scan.values[0])?;
    } else {
        non_negative(&r, "values", scan.values[0])?;
    }

    let r = reader("design");
    let design = DesignSettings {
        alpha: positive(&r, "alpha", r.number("alpha", d.design.alpha)?)?,
    };

    let r = reader("calibration");
    let dc = &d.calibration;
    let threshold = r.number("threshold", dc.threshold)?;
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(ConfigError::new(r.line("threshold"), "threshold", "must lie in (0.5, 1)"));
    }
    let tolerance = r.number("tolerance", dc.tolerance)?;
    if !(1e-12..=1e-6).contains(&tolerance) {
        return Err(ConfigError::new(r.line("tolerance"), "tolerance", "must lie in [1e-12, 1e-6]"));
    }
    let ramp_fraction = r.number("ramp_fraction", dc.ramp_fraction)?;
    if !(0.0..0.5).contains(&ramp_fraction) {
        return Err(ConfigError::new(r.line("ramp_fraction"), "ramp_fraction", "must lie in [0, 0.5)"));
    }
    let calibration = CalibrationSettings {
        threshold,
        resonance: positive(
            &r,
            "resonance",
            r.quantity("resonance", Dimension::Frequency, dc.resonance)?,
        )?,
        delta_nu: increasing(&r, "delta_nu", r.list("delta_nu", Some(Dimension::Frequency), dc.delta_nu.clone())?)?,
        sweep_period: increasing(
            &r,
            "sweep_period",
            r.list("sweep_period", Some(Dimension::Time), dc.sweep_period.clone())?,
        )?,
        tolerance,
        relative_precision: positive(
            &r,
            "relative_precision",
            r.number("relative_precision", dc.relative_precision)?,
        )?,
        ramp_fraction,
    };
    positive(&r, "delta_nu", calibration.delta_nu[0])?;
    positive(&r, "sweep_period", calibration.sweep_period[0])?;

    let r = reader("lz");
    let lz = LzSettings {
        rabi: increasing(&r, "rabi", r.list("rabi", Some(Dimension::Frequency), d.lz.rabi.clone())?)?,
        window: positive(&r, "window", r.number("window", d.lz.window)?)?,
        tolerance: r.number("tolerance", d.lz.tolerance)?,
    };
    positive(&r, "rabi", lz.rabi[0])?;
    if !(1e-12..=1e-6).contains(&lz.tolerance) {
        return Err(ConfigError::new(r.line("tolerance"), "tolerance", "must lie in [1e-12, 1e-6]"));
    }

    let r = reader("dressed");
    let dd = &d.dressed;
    let dressed = DressedSettings {
        rabi: non_negative(&r, "rabi", r.quantity("rabi", Dimension::Frequency, dd.rabi)?)?,
        detuning_min: r.quantity("detuning_min", Dimension::Frequency, dd.detuning_min)?,
        detuning_max: r.quantity("detuning_max", Dimension::Frequency, dd.detuning_max)?,
        points: at_least(&r, "points", r.integer("points", dd.points)?, 2)?,
    };
    if !(dressed.detuning_max > dressed.detuning_min) {
        return Err(ConfigError::new(r.line("detuning_max"), "detuning_max", "must exceed detuning_min"));
    }

    let r = reader("averaged_force");
    let da = &d.averaged_force;
    let averaged_force = AveragedForceSettings {
        x_min: r.quantity("x_min", Dimension::Length, da.x_min)?,
        x_max: r.quantity("x_max", Dimension::Length, da.x_max)?,
        points: at_least(&r, "points", r.integer("points", da.points)?, 2)?,
        m0: r.integer("m0", da.m0)?,
        periods: at_least(&r, "periods", r.integer("periods", da.periods)?, 1)?,
    };
    if !(averaged_force.x_max > averaged_force.x_min) {
        return Err(ConfigError::new(r.line("x_max"), "x_max", "must exceed x_min"));
    }

    let r = reader("loading");
    let dl = &d.loading;
    let loading = LoadingSettings {
        params: LoadingParams {
            rate: non_negative(&r, "rate", r.quantity("rate", Dimension::Rate, dl.params.rate)?)?,
            tau: positive(&r, "tau", r.quantity("tau", Dimension::Time, dl.params.tau)?)?,
            beta: non_negative(&r, "beta", r.quantity("beta", Dimension::VolumeRate, dl.params.beta)?)?,
            v_eff: positive(&r, "v_eff", r.quantity("v_eff", Dimension::Volume, dl.params.v_eff)?)?,
            n0: non_negative(&r, "n0", r.number("n0", dl.params.n0)?)?,
        },
        duration: positive(&r, "duration", r.quantity("duration", Dimension::Time, dl.duration)?)?,
        points: at_least(&r, "points", r.integer("points", dl.points)?, 2)?,
    };

    for sec in sections.values() {
        for (key, e) in &sec.entries {
            if !e.used.get() {
                return Err(ConfigError::new(
                    e.line,
                    key,
                    format!("unknown key in [{}]", sec.name),
                ));
            }
        }
    }

    Ok(RunConfig {
        seed,
        out,
        species,
        quadrupole,
        dipole,
        sweep,
        ensemble,
        simulation,
        scan,
        design,
        calibration,
        lz,
        dressed,
        averaged_force,
        loading,
    })
}

impl RunConfig {
    /// Every value in SI units, in the input format.
    pub fn serialize(&self) -> String {
        use Dimension::*;
        let q = format_si;
        let mut s = String::new();
        let mut section = |name: &str, lines: Vec<(&str, String)>| {
            let _ = writeln!(s, "[{name}]");
            for (k, v) in lines {
                let _ = writeln!(s, "{k} = {v}");
            }
            s.push('\n');
        };
        section(
            "run",
            vec![
                ("seed", self.seed.to_string()),
                ("out", self.out.display().to_string()),
            ],
        );
        section(
            "species",
            vec![
                ("j", format!("{:e}", self.species.j)),
                ("g_j", format!("{:e}", self.species.g_j)),
                ("mass", q(self.species.mass, Mass)),
            ],
        );
        section(
            "quadrupole",
            vec![
                ("gradient", q(self.quadrupole.gradient_axial, FieldGradient)),
                ("center", fmt_vec(&self.quadrupole.center, Some(Length))),
                ("regularization_radius", q(self.quadrupole.regularization_radius, Length)),
            ],
        );
        section(
            "dipole",
            vec![
                ("power", q(self.dipole.power, Power)),
                ("waist", q(self.dipole.waist, Length)),
                ("wavelength", q(self.dipole.wavelength, Length)),
                ("rayleigh_length", q(self.dipole.rayleigh_length, Length)),
                ("trap_depth", q(self.dipole.trap_depth, Energy)),
                ("retro_reflected", self.dipole.retro_reflected.to_string()),
                ("focus", fmt_vec(&self.dipole.focus, Some(Length))),
            ],
        );
        section(
            "sweep",
            vec![
                ("nu_min", q(self.sweep.nu_min, Frequency)),
                ("nu_max", q(self.sweep.nu_max, Frequency)),
                ("sweep_rate", q(self.sweep.sweep_rate, Frequency)),
                ("shape", self.sweep.shape.as_str().to_string()),
                ("b_rf", q(self.sweep.b_rf, MagneticField)),
                ("polarization", fmt_vec(&self.sweep.polarization_axis, None)),
                (
                    "phase_reset_seed",
                    self.sweep
                        .phase_reset_seed
                        .map_or_else(|| "none".to_string(), |v| v.to_string()),
                ),
            ],
        );
        section(
            "ensemble",
            vec![
                ("n_atoms", self.ensemble.n_atoms.to_string()),
                ("temperature", q(self.ensemble.temperature, Temperature)),
                ("initial_distribution", self.ensemble.initial_distribution.as_str().to_string()),
                ("m_policy", self.ensemble.m_policy.as_str().to_string()),
            ],
        );
        let sim = &self.simulation;
        section(
            "simulation",
            vec![
                ("duration", q(sim.duration, Time)),
                ("dt", sim.dt_max.map_or_else(|| "auto".to_string(), |v| q(v, Time))),
                ("rf_enabled", sim.rf_enabled.to_string()),
                ("flip_model", sim.flip_mode.as_str().to_string()),
                ("record_atoms", sim.record_atoms.to_string()),
                ("record_interval", q(sim.record_interval, Time)),
                ("box_half_size", q(sim.box_half_size, Length)),
                ("energy_escape", sim.energy_escape.to_string()),
            ],
        );
        section(
            "scan",
            vec![
                ("axis", self.scan.axis.as_str().to_string()),
                ("values", fmt_list(&self.scan.values, Some(Frequency))),
            ],
        );
        section("design", vec![("alpha", format!("{:e}", self.design.alpha))]);
        let c = &self.calibration;
        section(
            "calibration",
            vec![
                ("threshold", format!("{:e}", c.threshold)),
                ("resonance", q(c.resonance, Frequency)),
                ("delta_nu", fmt_list(&c.delta_nu, Some(Frequency))),
                ("sweep_period", fmt_list(&c.sweep_period, Some(Time))),
                ("tolerance", format!("{:e}", c.tolerance)),
                ("relative_precision", format!("{:e}", c.relative_precision)),
                ("ramp_fraction", format!("{:e}", c.ramp_fraction)),
            ],
        );
        section(
            "lz",
            vec![
                ("rabi", fmt_list(&self.lz.rabi, Some(Frequency))),
                ("window", format!("{:e}", self.lz.window)),
                ("tolerance", format!("{:e}", self.lz.tolerance)),
            ],
        );
        section(
            "dressed",
            vec![
                ("rabi", q(self.dressed.rabi, Frequency)),
                ("detuning_min", q(self.dressed.detuning_min, Frequency)),
                ("detuning_max", q(self.dressed.detuning_max, Frequency)),
                ("points", self.dressed.points.to_string()),
            ],
        );
        let a = &self.averaged_force;
        section(
            "averaged_force",
            vec![
                ("x_min", q(a.x_min, Length)),
                ("x_max", q(a.x_max, Length)),
                ("points", a.points.to_string()),
                ("m0", a.m0.to_string()),
                ("periods", a.periods.to_string()),
            ],
        );
        let l = &self.loading;
        section(
            "loading",
            vec![
                ("rate", q(l.params.rate, Rate)),
                ("tau", q(l.params.tau, Time)),
                ("beta", q(l.params.beta, VolumeRate)),
                ("v_eff", q(l.params.v_eff, Volume)),
                ("n0", format!("{:e}", l.params.n0)),
                ("duration", q(l.duration, Time)),
                ("points", l.points.to_string()),
            ],
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_share_the_trailing_unit() {
        assert_eq!(
            parse_list("2, 6.5, 10 MHz", Some(Dimension::Frequency)).unwrap(),
            vec![2e6, 6.5e6, 10e6]
        );
        assert_eq!(parse_list("1, 0, 0", None).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(parse_list("2, 6.5, 10", Some(Dimension::Frequency)).is_err());
        assert!(parse_list("2,, 10 MHz", Some(Dimension::Frequency)).is_err());
        assert!(parse_list("2 MHz", Some(Dimension::Frequency)).is_ok());
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = parse_config("# top\n\n[quadrupole]\n; note\ngradient = 18 G/cm\n").unwrap();
        assert_eq!(cfg.quadrupole.gradient_axial, 0.18);
    }

    #[test]
    fn structural_errors() {
        assert_eq!(parse_config("gradient = 9 G/cm").unwrap_err().line, 1);
        assert_eq!(parse_config("[nope]").unwrap_err().key, "nope");
        assert!(parse_config("[sweep]\n[sweep]").is_err());
        assert!(parse_config("[sweep]\nnu_min = 1 MHz\nnu_min = 2 MHz").is_err());
        assert!(parse_config("[sweep\n").is_err());
        assert!(parse_config("[sweep]\nnu_min 1 MHz").is_err());
    }
}
