//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.

use rfsweep::constants::K_B;
use rfsweep::criteria::min_rabi_for_adiabatic;
use rfsweep::field::{
    dipole_potential_and_force, field_for_resonance, quadrupole_field, rf_amplitude_for_rabi,
    DipoleTrapConfig, QuadrupoleFieldConfig,
};
use rfsweep::loading::{
    integrate_loading, mean_m_estimate, oscillation_period_estimate, rise_time, steady_state,
    thermal_radius, LoadingParams,
};
use rfsweep::quantum::{
    fit_binomial_q, lz_tdse_populations, lz_two_level, sweep_transfer_tol, HamiltonianSpec,
    RfEnvelope,
};
use rfsweep::species::SpeciesParams;
use rfsweep::sweep::RfSweepConfig;
use rfsweep::trajectory::{
    potential_energy, retention_scan, sample_ensemble, simulate, step, time_averaged_force, Atom,
    EnsembleConfig, FlipModel, InitialDistribution, MPolicy, ScanAxis, ScanPoint,
    SimulationConfig, Traps,
};
use rfsweep::Vec3;
use rfsweep_cli::config::RunConfig;
use rfsweep_cli::{main_with_args, run, Command};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn design_frequency() -> Outcome {
    let dir = tempdir();
    let cfg = RunConfig {
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    run(Command::SweepDesign, &cfg).unwrap();
    let text = fs::read_to_string(dir.path().join("sweep_design.csv")).unwrap();
    let nu_max: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("nu_max,"))
        .and_then(|r| r.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    outcome(
        (nu_max / 4.72e6 - 1.0).abs() < 0.01,
        format!("nu_max = {:.4} MHz (4.72 MHz +- 1%)", nu_max / 1e6),
    )
}

fn alpha_calibration() -> Outcome {
    let dir = tempdir();
    let cfg = RunConfig {
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    run(Command::AlphaCalibrate, &cfg).unwrap();
    let summary = &csv_rows(&dir.path().join("alpha_summary.csv"))[0];
    let points = csv_rows(&dir.path().join("alpha_points.csv"));
    let (alpha, spread) = (summary[0], summary[1]);
    outcome(
        (2.0..=6.0).contains(&alpha) && spread < 2.0 && points.len() == 9,
        format!(
            "J = 4, threshold 0.99, 3x3 grid: median alpha = {alpha:.3} (in [2, 6]), max/min = {spread:.3} (< 2)"
        ),
    )
}

fn two_level_lz() -> Outcome {
    let dir = tempdir();
    let cfg = RunConfig {
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    run(Command::LzScan, &cfg).unwrap();
    let rows = csv_rows(&dir.path().join("lz_scan.csv"));
    let worst = rows.iter().map(|r| (r[3] - r[2]).abs()).fold(0.0, f64::max);
    outcome(
        rows.len() == 10 && worst < 1e-3,
        format!("{} Rabi frequencies, max |TDSE - closed form| = {worst:.2e} (< 1e-3)", rows.len()),
    )
}

fn spin_j_binomial() -> Outcome {
    let rate = 2.0 * PI * 6.5e6 * 10e3;
    let mut worst: f64 = 0.0;
    for p in [0.8, 0.5, 0.2] {
        // Ω with two-level survival p
        let omega = (-2.0 * rate * f64::ln(p) / PI).sqrt();
        let pops = lz_tdse_populations(8, omega, rate, 50.0, 1e-10).unwrap();
        let q = fit_binomial_q(&pops).unwrap();
        let q2 = lz_two_level(omega, rate).unwrap();
        worst = worst.max((q - q2).abs());
    }
    outcome(
        worst < 2e-3,
        format!("J = 4 sweeps at q = 0.2, 0.5, 0.8: max |q_fit - q_two_level| = {worst:.2e} (< 2e-3)"),
    )
}

fn force_averaging() -> Outcome {
    let traps = Traps::default();
    let sweep = RfSweepConfig::default();
    let mid = 0.5 * (sweep.nu_min + sweep.nu_max);
    let x = field_for_resonance(mid, &traps.species) / traps.quadrupole.gradient_axial;
    let f = time_averaged_force(&Vec3::new(x, 0.0, 0.0), &sweep, &FlipModel::adiabatic(), &traps, 4, 20).unwrap();
    let mag = f.magnetic.norm() / f.instantaneous_magnetic.norm();
    let total = (f.total - f.dipole).norm() / f.dipole.norm();
    outcome(
        mag < 0.05 && total < 0.05,
        format!("|<F_mag>|/|F_mag,inst| = {mag:.2e} (< 5%), |<F> - F_dip|/|F_dip| = {total:.2e} (< 5%)"),
    )
}

fn mc_ensemble(n: usize) -> (Traps, Vec<Atom>) {
    let traps = Traps::default();
    let cfg = EnsembleConfig {
        n_atoms: n,
        initial_distribution: InitialDistribution::DipoleOnlyThermal,
        m_policy: MPolicy::AllSublevelsUniform,
        seed: 1,
        ..Default::default()
    };
    let atoms = sample_ensemble(&cfg, &traps).unwrap();
    (traps, atoms)
}

fn fmt_curve(points: &[ScanPoint], scale: f64, unit: &str) -> String {
    points
        .iter()
        .map(|p| format!("{}{unit}:{:.3}", (p.value / scale * 1e6).round() / 1e6, p.retained_fraction))
        .collect::<Vec<_>>()
        .join(" ")
}

fn sweep_rate_curve() -> Outcome {
    let (traps, atoms) = mc_ensemble(2000);
    let grid = [50.0, 100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 10e3, 20e3];
    let pts = retention_scan(ScanAxis::SweepRate, &grid, &atoms, &traps, &SimulationConfig::default()).unwrap();
    let monotone = pts
        .windows(2)
        .all(|w| w[1].retained_fraction >= w[0].retained_fraction - (w[0].stderr + w[1].stderr));
    let rising = pts[pts.len() - 1].retained_fraction > pts[0].retained_fraction + 3.0 * (pts[0].stderr + pts[pts.len() - 1].stderr);
    let at = |v: f64| pts.iter().find(|p| p.value == v).unwrap().retained_fraction;
    let change = (at(20e3) - at(2e3)).abs() / at(2e3);
    outcome(
        monotone && rising && change < 0.1,
        format!(
            "monotone within error bars: {monotone}, 2 -> 20 kHz change {:.1}% (< 10%); {}",
            100.0 * change,
            fmt_curve(&pts, 1e3, "kHz")
        ),
    )
}

fn rabi_curve() -> Outcome {
    let (traps, atoms) = mc_ensemble(2000);
    let base = SimulationConfig::default();
    let baseline = simulate(
        &atoms,
        &traps,
        &SimulationConfig {
            rf_enabled: false,
            ..base
        },
    )
    .unwrap();
    let b = baseline.retained_fraction;
    let b_err = (b * (1.0 - b) / atoms.len() as f64).sqrt();
    let threshold = min_rabi_for_adiabatic(base.sweep.span(), base.sweep.period(), 4.0).unwrap();
    let grid: Vec<f64> = [1e3, 3e3, 10e3, 30e3, 100e3, 300e3, 510e3, 1e6, 2e6, 4e6]
        .iter()
        .map(|f| 2.0 * PI * f)
        .collect();
    let pts = retention_scan(ScanAxis::RfPower, &grid, &atoms, &traps, &base).unwrap();
    let low: Vec<&ScanPoint> = pts.iter().filter(|p| p.value < 0.99 * threshold).collect();
    let high: Vec<&ScanPoint> = pts.iter().filter(|p| p.value >= 0.99 * threshold).collect();
    let dip = low
        .iter()
        .map(|p| p.retained_fraction)
        .fold(f64::INFINITY, f64::min);
    let dip_ok = dip < b - 3.0 * b_err;
    let hi_max = high.iter().map(|p| p.retained_fraction).fold(0.0, f64::max);
    let hi_min = high.iter().map(|p| p.retained_fraction).fold(1.0, f64::min);
    let hi_err = high.iter().map(|p| p.stderr).fold(0.0, f64::max);
    let rel = (hi_max - hi_min) / hi_max;
    let flat = rel < 0.05 || hi_max - hi_min <= 2.0 * hi_err;
    let scaled: Vec<ScanPoint> = pts
        .iter()
        .map(|p| ScanPoint {
            value: p.value / (2.0 * PI),
            ..*p
        })
        .collect();
    outcome(
        dip_ok && flat,
        format!(
            "no-rf baseline {b:.3}; dip to {dip:.3} (< baseline - 3 sigma): {dip_ok}; \
             spread above 510 kHz {:.3} ({:.1}% < 5% or <= 2 sigma = {:.3}): {flat}; {}",
            hi_max - hi_min,
            100.0 * rel,
            2.0 * hi_err,
            fmt_curve(&scaled, 1e3, "kHz")
        ),
    )
}

fn loading_numbers() -> Outcome {
    let p = LoadingParams {
        rate: 1.7e7,
        tau: 0.12,
        beta: 0.0,
        ..Default::default()
    };
    let n = integrate_loading(&p, &[0.0, 20.0 * p.tau]).unwrap()[1];
    let rise = rise_time(&p).unwrap();
    let n_inf = steady_state(&p).unwrap();
    outcome(
        (n / 2.04e6 - 1.0).abs() < 0.02 && (n_inf / 2.04e6 - 1.0).abs() < 0.02 && (rise / 0.12 - 1.0).abs() < 0.01,
        format!("N(20 tau) = {n:.4e} (2.04e6 +- 2%), 1/e rise time = {:.3} ms (120 ms +- 1%)", rise * 1e3),
    )
}

fn halo_estimates() -> Outcome {
    let q = QuadrupoleFieldConfig::default();
    let sp = SpeciesParams::chromium_5d4();
    let r = thermal_radius(2, 100e-6, &q, &sp).unwrap();
    let m = mean_m_estimate(500e-6, 100e-6, &q, &sp).unwrap();
    let t = oscillation_period_estimate(2, 100e-6, &q, &sp).unwrap();
    let ratio = t / 10e-3;
    outcome(
        (r / 551e-6 - 1.0).abs() < 0.01
            && (r / 500e-6 - 1.0).abs() < 0.2
            && (m - 2.2).abs() < 0.05
            && (1.0 / 3.0..3.0).contains(&ratio),
        format!(
            "radius(m = 2, 100 uK) = {:.1} um, mean m(500 um) = {m:.3}, period = {:.1} ms ({ratio:.2}x 10 ms)",
            r * 1e6,
            t * 1e3
        ),
    )
}

fn invariants() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // spin propagation through one full sweep at the adiabatic threshold
    let sp = SpeciesParams::chromium_5d4();
    let omega = min_rabi_for_adiabatic(6.5e6, 100e-6, 4.0).unwrap();
    let sweep = RfSweepConfig {
        b_rf: rf_amplitude_for_rabi(omega, &sp),
        polarization_axis: Vec3::x(),
        ..Default::default()
    };
    let mut spec = HamiltonianSpec::new(sp, Vec3::zeros(), sweep);
    spec.envelope = RfEnvelope::EdgeRamped { fraction: 0.1 };
    let b = Vec3::new(0.0, 0.0, field_for_resonance(3.75e6, &sp));
    let drift = sweep_transfer_tol(&b, &spec, 4.0, 1e-9).unwrap().norm_drift;
    ok &= drift < 1e-8;
    notes.push(format!("norm drift {drift:.1e}"));

    // divergence of the quadrupole and gradient consistency of the dipole trap
    let quad = QuadrupoleFieldConfig::default();
    let trap = DipoleTrapConfig::default();
    let (mut div_worst, mut grad_worst): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let s = i as f64;
        let r = Vec3::new(
            2e-3 * (0.7 * s).sin(),
            60e-6 * (1.3 * s).cos(),
            60e-6 * (2.1 * s + 0.4).sin(),
        );
        let h = 1e-7;
        let mut div = 0.0;
        let mut grad = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            div += (quadrupole_field(&(r + e), &quad).field[k] - quadrupole_field(&(r - e), &quad).field[k]) / (2.0 * h);
            let hk = if k == 0 { 1e-6 } else { 1e-9 };
            let mut e = Vec3::zeros();
            e[k] = hk;
            grad[k] = (dipole_potential_and_force(&(r + e), &trap).0 - dipole_potential_and_force(&(r - e), &trap).0) / (2.0 * hk);
        }
        div_worst = div_worst.max(div.abs() / quad.gradient_axial);
        let (_, f) = dipole_potential_and_force(&r, &trap);
        if f.norm() > 0.0 {
            grad_worst = grad_worst.max((f + grad).norm() / f.norm());
        }
    }
    ok &= div_worst < 1e-10 && grad_worst < 1e-6;
    notes.push(format!("div B / B' {div_worst:.1e}, |F + grad U|/|F| {grad_worst:.1e}"));

    // bit-identical trajectory CSV for one and two worker threads
    let dir = tempdir();
    let cfg = dir.path().join("c.ini");
    fs::write(
        &cfg,
        "[ensemble]\nn_atoms = 200\n[simulation]\nduration = 20 ms\nrecord_atoms = 20\n\
         flip_model = lz_probabilistic\n[sweep]\nrabi = 30 kHz\n",
    )
    .unwrap();
    let mut files = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(format!("t{threads}"));
        let code = main_with_args([
            "rfsweep",
            "trajectories",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        ok &= code == 0;
        files.push(
            ["trajectories.csv", "retention_history.csv", "losses.csv"].map(|f| fs::read(out.join(f)).unwrap_or_default()),
        );
    }
    let same = files[0] == files[1] && !files[0][0].is_empty();
    ok &= same;
    notes.push(format!("thread-count independent CSV: {same}"));

    // probe atom with fixed sublevel, no RF, 100 ms
    let traps = Traps::default();
    let a0 = Atom::new(Vec3::new(8e-4, 3e-4, -2e-4), Vec3::new(0.0, 0.05, 0.02), 2);
    let energy = |a: &Atom| 0.5 * traps.species.mass * a.v.norm_squared() + potential_energy(a, &traps);
    let e0 = energy(&a0);
    let mut a = a0;
    let mut e_worst: f64 = 0.0;
    for n in 0..100_000 {
        a = step(&a, 1e-6, &traps);
        if n % 50 == 0 {
            e_worst = e_worst.max((energy(&a) - e0).abs() / e0.abs());
        }
    }
    ok &= a.alive && e_worst < 1e-4;
    notes.push(format!(
        "energy drift {e_worst:.1e} over 100 ms (|E0| = {:.0} uK)",
        e0.abs() / K_B * 1e6
    ));

    outcome(ok, notes.join("; "))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    check: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "upper sweep frequency design rule",
            limit: Duration::from_secs(1),
            check: design_frequency,
        },
        Criterion {
            id: 2,
            name: "adiabaticity constant calibration",
            limit: Duration::from_secs(300),
            check: alpha_calibration,
        },
        Criterion {
            id: 3,
            name: "two-level Landau-Zener closed form",
            limit: Duration::from_secs(30),
            check: two_level_lz,
        },
        Criterion {
            id: 4,
            name: "spin-J binomial populations",
            limit: Duration::from_secs(300),
            check: spin_j_binomial,
        },
        Criterion {
            id: 5,
            name: "period-averaged force",
            limit: Duration::from_secs(60),
            check: force_averaging,
        },
        Criterion {
            id: 6,
            name: "retention versus sweep rate",
            limit: Duration::from_secs(1800),
            check: sweep_rate_curve,
        },
        Criterion {
            id: 7,
            name: "retention versus Rabi frequency",
            limit: Duration::from_secs(1800),
            check: rabi_curve,
        },
        Criterion {
            id: 8,
            name: "loading curve numbers",
            limit: Duration::from_secs(1),
            check: loading_numbers,
        },
        Criterion {
            id: 9,
            name: "magnetic halo estimates",
            limit: Duration::from_secs(1),
            check: halo_estimates,
        },
        Criterion {
            id: 10,
            name: "invariant suite",
            limit: Duration::from_secs(600),
            check: invariants,
        },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.id.to_string() == *f || c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = (c.check)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {}: {} [{:.2} s, limit {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            o.detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            if in_time { "" } else { ", too slow" }
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
