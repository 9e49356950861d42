//! One function per subcommand. Each writes its CSV files and returns the
//! lines printed on standard output.

use crate::config::RunConfig;
use crate::output::{num, OutputDir};
use crate::CliError;
use rfsweep::criteria::{min_rabi_for_adiabatic, nu_max_estimate};
use rfsweep::field::{rabi_frequency, rf_amplitude_for_rabi};
use rfsweep::loading::{
    integrate_loading, oscillation_period_estimate, rise_time, steady_state, thermal_radius,
};
use rfsweep::quantum::{
    alpha_lz_analytic, calibrate_alpha, dressed_energies, lz_tdse_survival, lz_two_level,
    CalibrationOptions, RfEnvelope,
};
use rfsweep::trajectory::{
    local_resonance, retention_scan, sample_ensemble, simulate, time_averaged_force, Atom,
    FlipMode, FlipModel, ScanAxis, SimulationConfig, Traps,
};
use rfsweep::Vec3;
use std::f64::consts::PI;

type Lines = Vec<String>;

fn io(out: &OutputDir, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", out.dir().display()))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

pub fn traps(cfg: &RunConfig) -> Traps {
    Traps {
        species: cfg.species,
        quadrupole: cfg.quadrupole,
        dipole: cfg.dipole,
        box_half_size: cfg.simulation.box_half_size,
        energy_escape: cfg.simulation.energy_escape,
    }
}

pub fn flip_model(cfg: &RunConfig) -> Result<FlipModel, CliError> {
    Ok(match cfg.simulation.flip_mode {
        FlipMode::AdiabaticFullFlip => FlipModel::adiabatic(),
        FlipMode::LzProbabilistic => FlipModel::landau_zener(rabi_frequency(cfg.sweep.b_rf, &cfg.species)?),
    })
}

pub fn simulation_config(cfg: &RunConfig) -> Result<SimulationConfig, CliError> {
    let s = &cfg.simulation;
    Ok(SimulationConfig {
        sweep: cfg.sweep,
        flip: flip_model(cfg)?,
        rf_enabled: s.rf_enabled,
        duration: s.duration,
        dt_max: s.dt_max,
        record_atoms: s.record_atoms,
        record_interval: s.record_interval,
        seed: cfg.seed,
    })
}

fn ensemble(cfg: &RunConfig, traps: &Traps) -> Result<Vec<Atom>, CliError> {
    let mut e = cfg.ensemble;
    e.seed = cfg.seed;
    Ok(sample_ensemble(&e, traps)?)
}

pub fn sweep_design(cfg: &RunConfig, out: &mut OutputDir) -> Result<Lines, CliError> {
    let sp = &cfg.species;
    let nu_max = nu_max_estimate(&cfg.quadrupole, &cfg.dipole, sp);
    let span = cfg.sweep.span();
    let t_s = cfg.sweep.period();
    let omega_min = min_rabi_for_adiabatic(span, t_s, cfg.design.alpha)?;
    let b_rf_min = rf_amplitude_for_rabi(omega_min, sp);
    let omega = rabi_frequency(cfg.sweep.b_rf, sp)?;
    let alpha_lz = alpha_lz_analytic(sp.two_j(), cfg.calibration.threshold, 1.0)?;
    let rows: Vec<(&str, f64, &str)> = vec![
        ("nu_max", nu_max, "Hz"),
        ("nu_min_configured", cfg.sweep.nu_min, "Hz"),
        ("nu_max_configured", cfg.sweep.nu_max, "Hz"),
        ("delta_nu", span, "Hz"),
        ("sweep_period", t_s, "s"),
        ("alpha", cfg.design.alpha, "1"),
        ("omega_min_over_2pi", omega_min / (2.0 * PI), "Hz"),
        ("b_rf_min", b_rf_min, "T"),
        ("omega_configured_over_2pi", omega / (2.0 * PI), "Hz"),
        ("adiabatic", if omega >= omega_min { 1.0 } else { 0.0 }, "1"),
        ("alpha_lz_closed_form", alpha_lz, "1"),
    ];
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(k, v, u)| vec![k.to_string(), num(*v), u.to_string()])
        .collect();
    out.csv("sweep_design.csv", &[], &["quantity", "value", "unit"], &table)
        .map_err(|e| io(out, e))?;
    let mut lines = vec![
        format!("nu_max = {:.4} MHz", nu_max / 1e6),
        format!(
            "omega_min/2pi = {:.1} kHz (alpha = {}, delta_nu = {:.3} MHz, t_S = {:.1} us)",
            omega_min / (2.0 * PI) / 1e3,
            cfg.design.alpha,
            span / 1e6,
            t_s * 1e6
        ),
        format!("b_rf_min = {:.4} mG", b_rf_min / 1e-7),
    ];
    if nu_max > cfg.sweep.nu_max {
        lines.push(format!(
            "warning: configured nu_max {:.3} MHz is below the estimate",
            cfg.sweep.nu_max / 1e6
        ));
    }
    Ok(lines)
}

pub fn lz_scan(cfg: &RunConfig, out: &mut OutputDir) -> Result<Lines, CliError> {
    let rate = 2.0 * PI * cfg.sweep.span() * cfg.sweep.sweep_rate;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &f in &cfg.lz.rabi {
        let omega = 2.0 * PI * f;
        let analytic = lz_two_level(omega, rate)?;
        let tdse = lz_tdse_survival(omega, rate, cfg.lz.window, cfg.lz.tolerance)?;
        worst = worst.max((tdse - analytic).abs());
        rows.push(vec![num(f), num(omega), num(analytic), num(tdse), num((tdse - analytic).abs())]);
    }
    out.csv(
        "lz_scan.csv",
        &[("detuning_rate_rad_s2", num(rate)), ("window_omega", num(cfg.lz.window))],
        &["rabi_over_2pi_hz", "omega_rad_s", "lz_analytic", "tdse", "abs_diff"],
        &rows,
    )
    .map_err(|e| io(out, e))?;
    Ok(vec![format!(
        "{} points, max |TDSE - closed form| = {worst:.2e}",
        rows.len()
    )])
}

pub fn alpha_calibrate(cfg: &RunConfig, out: &mut OutputDir) -> Result<Lines, CliError> {
    let c = &cfg.calibration;
    let opts = CalibrationOptions {
        shape: cfg.sweep.shape,
        envelope: RfEnvelope::EdgeRamped {
            fraction: c.ramp_fraction,
        },
        tolerance: c.tolerance,
        relative_precision: c.relative_precision,
        ..Default::default()
    };
    let cal = calibrate_alpha(&cfg.species, c.b_local(&cfg.species), &c.grid(), c.threshold, &opts)?;
    let rows: Vec<Vec<String>> = cal
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.delta_nu),
                num(p.t_s),
                num(p.omega_threshold / (2.0 * PI)),
                num(p.alpha),
                num(p.efficiency),
            ]
        })
        .collect();
    let echo = [("threshold", num(c.threshold)), ("resonance_hz", num(c.resonance))];
    out.csv(
        "alpha_points.csv",
        &echo,
        &["delta_nu_hz", "sweep_period_s", "omega_threshold_over_2pi_hz", "alpha", "efficiency"],
        &rows,
    )
    .map_err(|e| io(out, e))?;
    let analytic = alpha_lz_analytic(cfg.species.two_j(), c.threshold, 1.0)?;
    out.csv(
        "alpha_summary.csv",
        &echo,
        &["median_alpha", "spread", "alpha_closed_form"],
        &[vec![num(cal.alpha), num(cal.spread), num(analytic)]],
    )
    .map_err(|e| io(out, e))?;
    Ok(vec![format!(
        "median alpha = {:.3} over {} points (max/min = {:.3}; closed form {:.3})",
        cal.alpha,
        cal.points.len(),
        cal.spread,
        analytic
    )])
}

pub fn dressed_map(cfg: &RunConfig, out: &mut OutputDir) -> Result<Lines, CliError> {
    let d = &cfg.dressed;
    let j = cfg.species.j;
    let dim = cfg.species.dim();
    let labels: Vec<String> = (0..dim)
        .map(|k| format!("energy_m{}_j", k as f64 - j))
        .collect();
    let mut columns = vec!["detuning_hz"];
    columns.extend(labels.iter().map(String::as_str));
    let mut rows = Vec::new();
    for delta in linspace(d.detuning_min, d.detuning_max, d.points) {
        let e = dressed_energies(2.0 * PI * delta, 2.0 * PI * d.rabi, j)?;
        let mut row = vec![num(delta)];
        row.extend(e.into_iter().map(num));
        rows.push(row);
    }
    out.csv("dressed_map.csv", &[("rabi_over_2pi_hz", num(d.rabi))], &columns, &rows)
        .map_err(|e| io(out, e))?;
    Ok(vec![format!("{} detunings x {dim} dressed levels", rows.len())])
}

pub fn averaged_force(cfg: &RunConfig, out: &mut OutputDir) -> Result<Lines, CliError> {
    let a = &cfg.averaged_force;
    let traps = traps(cfg);
    let model = flip_model(cfg)?;
    let mut rows = Vec::new();
    for x in linspace(a.x_min, a.x_max, a.points) {
        let r = cfg.dipole.focus + Vec3::new(x, 0.0, 0.0);
        let f = time_averaged_force(&r, &cfg.sweep, &model, &traps, a.m0, a.periods)?;
        rows.push(vec![
            num(x),
            num(local_resonance(&r, &traps)),
            num(f.total.x),
            num(f.magnetic.x),
            num(f.dipole.x),
            num(f.instantaneous_magnetic.x),
            num(f.mean_m),
            f.crossing_fraction.map_or_else(String::new, num),
        ]);
    }
    out.csv(
        "averaged_force.csv",
        &[("m0", a.m0.to_string()), ("periods", a.periods.to_string())],
        &[
            "x_m",
            "resonance_hz",
            "force_total_x_n",
            "force_magnetic_x_n",
            "force_dipole_x_n",
            "force_instantaneous_magnetic_x_n",
            "mean_m",
            "crossing_fraction",
        ],
        &rows,
    )
    .map_err(|e| io(out, e))?;
    Ok(vec![format!("{} positions", rows.len())])
}

pub fn trajectories(cfg: &RunConfig, out: &mut OutputDir) -> Result<Lines, CliError> {
    let traps = traps(cfg);
    let atoms = ensemble(cfg, &traps)?;
    let res = simulate(&atoms, &traps, &simulation_config(cfg)?)?;
    let rows: Vec<Vec<String>> = res
        .trajectories
        .iter()
        .flatten()
        .map(|s| {
            vec![
                num(s.t),
                s.atom_id.to_string(),
                num(s.r.x),
                num(s.r.y),
                num(s.r.z),
                s.m_level.to_string(),
                u8::from(s.alive).to_string(),
            ]
        })
        .collect();
    out.csv("trajectories.csv", &[], &["t", "atom_id", "x", "y", "z", "m", "alive"], &rows)
        .map_err(|e| io(out, e))?;
    let history: Vec<Vec<String>> = res
        .retention_history
        .iter()
        .map(|(t, f)| vec![num(*t), num(*f)])
        .collect();
    out.csv(
        "retention_history.csv",
        &[("n_atoms", res.n_atoms.to_string()), ("dt_s", num(res.dt))],
        &["t", "retained_fraction"],
        &history,
    )
    .map_err(|e| io(out, e))?;
    let losses: Vec<Vec<String>> = res
        .loss_log
        .iter()
        .map(|l| vec![l.atom_id.to_string(), num(l.time), l.cause.as_str().to_string()])
        .collect();
    out.csv("losses.csv", &[], &["atom_id", "t", "cause"], &losses)
        .map_err(|e| io(out, e))?;
    Ok(vec![
        format!(
            "retained {} of {} atoms ({:.4}), {} spin flips",
            res.n_alive, res.n_atoms, res.retained_fraction, res.crossings
        ),
        format!(
            "rms extent of survivors: x {:.1} um, y {:.1} um, z {:.1} um",
            res.rms_extent.x * 1e6,
            res.rms_extent.y * 1e6,
            res.rms_extent.z * 1e6
        ),
    ])
}

pub fn retention(cfg: &RunConfig, out: &mut OutputDir) -> Result<Lines, CliError> {
    let traps = traps(cfg);
    let atoms = ensemble(cfg, &traps)?;
    let mut base = simulation_config(cfg)?;
    base.record_atoms = 0;
    let grid: Vec<f64> = match cfg.scan.axis {
        ScanAxis::SweepRate => cfg.scan.values.clone(),
        ScanAxis::RfPower => cfg.scan.values.iter().map(|f| 2.0 * PI * f).collect(),
    };
    let no_rf = SimulationConfig {
        rf_enabled: false,
        ..base
    };
    let baseline = simulate(&atoms, &traps, &no_rf)?.retained_fraction;
    let points = retention_scan(cfg.scan.axis, &grid, &atoms, &traps, &base)?;
    let rows: Vec<Vec<String>> = cfg
        .scan
        .values
        .iter()
        .zip(&points)
        .map(|(v, p)| vec![num(*v), num(p.retained_fraction), num(p.stderr)])
        .collect();
    let column = match cfg.scan.axis {
        ScanAxis::SweepRate => "sweep_rate_hz",
        ScanAxis::RfPower => "rabi_over_2pi_hz",
    };
    out.csv(
        "retention_scan.csv",
        &[
            ("axis", cfg.scan.axis.as_str().to_string()),
            ("baseline_no_rf", num(baseline)),
            ("n_atoms", atoms.len().to_string()),
        ],
        &[column, "retained_fraction", "stderr"],
        &rows,
    )
    .map_err(|e| io(out, e))?;
    let mut lines = vec![format!("no-rf baseline {baseline:.4}")];
    for (v, p) in cfg.scan.values.iter().zip(&points) {
        lines.push(format!("{v:>12.4e} Hz  {:.4} +- {:.4}", p.retained_fraction, p.stderr));
    }
    Ok(lines)
}

pub fn loading(cfg: &RunConfig, out: &mut OutputDir) -> Result<Lines, CliError> {
    let l = &cfg.loading;
    let p = &l.params;
    let grid = linspace(0.0, l.duration, l.points);
    let n = integrate_loading(p, &grid)?;
    let rows: Vec<Vec<String>> = grid.iter().zip(&n).map(|(t, v)| vec![num(*t), num(*v)]).collect();
    let echo = [
        ("rate_per_s", num(p.rate)),
        ("tau_s", num(p.tau)),
        ("beta_m3_per_s", num(p.beta)),
        ("v_eff_m3", num(p.v_eff)),
        ("n0", num(p.n0)),
    ];
    out.csv("loading.csv", &echo, &["t", "n"], &rows).map_err(|e| io(out, e))?;
    let n_inf = steady_state(p)?;
    let mut lines = vec![format!("steady state {n_inf:.4e} atoms")];
    if n_inf > p.n0 {
        lines.push(format!("1/e rise time {:.2} ms", rise_time(p)? * 1e3));
    }
    let t = cfg.ensemble.temperature;
    let j = cfg.species.integer_j().unwrap_or(0);
    let mut halo = Vec::new();
    for m in 1..=j {
        let r = thermal_radius(m, t, &cfg.quadrupole, &cfg.species)?;
        let period = oscillation_period_estimate(m, t, &cfg.quadrupole, &cfg.species)?;
        halo.push(vec![m.to_string(), num(r), num(period)]);
        if m == 2 {
            lines.push(format!(
                "m = 2 halo: 1/e radius {:.0} um, bounce period {:.1} ms",
                r * 1e6,
                period * 1e3
            ));
        }
    }
    out.csv(
        "halo.csv",
        &[("temperature_k", num(t))],
        &["m", "thermal_radius_m", "oscillation_period_s"],
        &halo,
    )
    .map_err(|e| io(out, e))?;
    Ok(lines)
}
