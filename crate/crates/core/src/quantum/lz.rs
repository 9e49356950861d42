use super::hamiltonian::{RotatingFrameSweep, TimeDependentHamiltonian};
use super::propagate::propagate_hamiltonian;
use super::spin::{SpinLadder, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Diabatic (non-flip) probability q = exp(−πΩ²/(2|dδ/dt|)) of the two-level
/// sweep H = (ħ/2)(δ(t)σ_z + Ωσ_x).
pub fn lz_two_level(omega: f64, detuning_rate: f64) -> Result<f64> {
    if !(detuning_rate > 0.0 && detuning_rate.is_finite()) {
        return Err(Error::domain(format!(
            "detuning rate must be positive (got {detuning_rate:e} rad/s^2)"
        )));
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::domain(format!("Rabi frequency must be non-negative (got {omega:e})")));
    }
    Ok((-PI * omega * omega / (2.0 * detuning_rate)).exp())
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| f64::from(k).ln()).sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp()
}

/// P(m) = C(2J, J−m) q^(J+m) (1−q)^(J−m), ordered m = −J … +J.
pub fn binomial_populations(two_j: u32, q: f64) -> Vec<f64> {
    (0..=two_j)
        .map(|k| {
            // k = J + m
            binomial(two_j, k) * q.powi(k as i32) * (1.0 - q).powi((two_j - k) as i32)
        })
        .collect()
}

/// Binomial parameter from the mean of a distribution over m = −J … +J,
/// q = (1 + ⟨m⟩/J)/2.
pub fn fit_binomial_q(populations: &[f64]) -> Result<f64> {
    if populations.len() < 2 {
        return Err(Error::domain("need at least two sublevels"));
    }
    let two_j = (populations.len() - 1) as f64;
    let total: f64 = populations.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("populations sum to zero"));
    }
    let mean_k: f64 = populations
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum::<f64>()
        / total;
    Ok((mean_k / two_j).clamp(0.0, 1.0))
}

/// Wigner small-d element d^J_{m′m}(β), with all labels doubled.
pub fn wigner_small_d(two_j: u32, two_mp: i32, two_m: i32, beta: f64) -> f64 {
    let tj = two_j as i32;
    if two_m.abs() > tj || two_mp.abs() > tj || (tj - two_m) % 2 != 0 || (tj - two_mp) % 2 != 0 {
        return 0.0;
    }
    let jpm = ((tj + two_m) / 2) as u32;
    let jmm = ((tj - two_m) / 2) as u32;
    let jpmp = ((tj + two_mp) / 2) as u32;
    let jmmp = ((tj - two_mp) / 2) as u32;
    let dm = (two_mp - two_m) / 2;
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let pre = 0.5 * (ln_factorial(jpmp) + ln_factorial(jmmp) + ln_factorial(jpm) + ln_factorial(jmm));
    let s_min = (-dm).max(0);
    let s_max = (jpm as i32).min(jmmp as i32);
    let mut sum = 0.0;
    for k in s_min..=s_max {
        let denom = ln_factorial(jpm - k as u32)
            + ln_factorial(k as u32)
            + ln_factorial((dm + k) as u32)
            + ln_factorial(jmmp - k as u32);
        let sign = if (dm + k) % 2 == 0 { 1.0 } else { -1.0 };
        let pc = tj + (two_m - two_mp) / 2 - 2 * k;
        let ps = dm + 2 * k;
        sum += sign * (pre - denom).exp() * c.powi(pc) * s.powi(ps);
    }
    sum
}

/// Final distribution over m′ (ordered −J … +J) after a sweep with two-level
/// diabatic probability `q`, starting from sublevel m0 (given as 2·m0).
///
/// A spin-J sweep is a rotation by β with cos²(β/2) = q, so
/// P(m′) = |d^J_{m′ m0}(β)|².
pub fn lz_transition_probabilities(two_j: u32, two_m0: i32, q: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("q = {q} is not a probability")));
    }
    if two_m0.abs() > two_j as i32 || (two_j as i32 - two_m0) % 2 != 0 {
        return Err(Error::domain(format!("m0 = {} is not a sublevel", f64::from(two_m0) / 2.0)));
    }
    let beta = 2.0 * q.sqrt().acos();
    Ok((0..=two_j as i32)
        .map(|k| wigner_small_d(two_j, 2 * k - two_j as i32, two_m0, beta).powi(2))
        .collect())
}

fn ascending_eigenvectors(m: DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    DMatrix::from_columns(&order.iter().map(|&k| eig.eigenvectors.column(k)).collect::<Vec<_>>())
}

/// Final populations of the rotating-frame sweep H/ħ = δ(t)J_z + ΩJ_x over
/// δ ∈ [−window·Ω, +window·Ω], started in the dressed state that connects to
/// m = +J.
///
/// Populations are taken in the dressed basis at the final detuning and
/// ordered by the bare label they connect to, m = −J … +J. Using dressed
/// states at both ends removes the truncation error of the finite window.
pub fn lz_tdse_populations(
    two_j: u32,
    omega: f64,
    detuning_rate: f64,
    window: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    lz_two_level(omega, detuning_rate)?;
    if !(omega > 0.0 && window > 0.0) {
        return Err(Error::domain("TDSE sweep needs Ω > 0 and a positive window"));
    }
    let half = window * omega / detuning_rate;
    let h = RotatingFrameSweep {
        ladder: SpinLadder::new(two_j),
        omega,
        detuning_rate,
        t_center: half,
    };
    // at negative detuning the lowest dressed state is m = +J
    let start = ascending_eigenvectors(h.matrix(0.0));
    let psi0 = start.column(0).into_owned();
    let (psi, _) = propagate_hamiltonian(&h, &psi0, 0.0, 2.0 * half, tol)?;
    // at positive detuning the k-th lowest dressed state is m = −J + k
    let end = ascending_eigenvectors(h.matrix(2.0 * half));
    Ok((end.adjoint() * psi).iter().map(|c| c.norm_sqr()).collect())
}

/// Two-level special case of [`lz_tdse_populations`]: probability of
/// staying in the initial diabatic state.
pub fn lz_tdse_survival(omega: f64, detuning_rate: f64, window: f64, tol: f64) -> Result<f64> {
    Ok(lz_tdse_populations(1, omega, detuning_rate, window, tol)?[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_level_closed_form() {
        assert_eq!(lz_two_level(0.0, 1e12).unwrap(), 1.0);
        let omega = (2.0 * 2f64.ln() * 1e12 / PI).sqrt();
        assert!((omega - 6.64e5).abs() < 1e3);
        assert!((lz_two_level(omega, 1e12).unwrap() - 0.5).abs() < 1e-12);
        assert!(lz_two_level(1.0, 0.0).is_err());
        assert!(lz_two_level(1.0, -1.0).is_err());
        assert!(lz_two_level(-1.0, 1.0).is_err());
    }

    #[test]
    fn two_level_tdse_matches_formula() {
        let rate = 1e12;
        for omega in [3e5, 6.64e5, 1.2e6] {
            let q = lz_two_level(omega, rate).unwrap();
            let num = lz_tdse_survival(omega, rate, 50.0, 1e-10).unwrap();
            assert!((num - q).abs() < 1e-3, "omega {omega}: tdse {num}, formula {q}");
        }
    }

    #[test]
    fn small_d_special_values() {
        // d^{1/2}_{1/2,1/2} = cos(β/2), d^{1/2}_{-1/2,1/2} = sin(β/2)
        let b = 0.7;
        assert!((wigner_small_d(1, 1, 1, b) - (b / 2.0).cos()).abs() < 1e-14);
        assert!((wigner_small_d(1, -1, 1, b) - (b / 2.0).sin()).abs() < 1e-14);
        // d^1_{00} = cos β, d^1_{10} = −sin β/√2
        assert!((wigner_small_d(2, 0, 0, b) - b.cos()).abs() < 1e-14);
        assert!((wigner_small_d(2, 2, 0, b) + b.sin() / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn small_d_matches_matrix_exponential() {
        use crate::quantum::spin::{angular_momentum_matrices, C64};
        use nalgebra::SymmetricEigen;
        let two_j = 8;
        let s = angular_momentum_matrices(4.0).unwrap();
        let beta = 1.1;
        // d(β) = exp(−iβJy)
        let eig = SymmetricEigen::new(s.jy.clone());
        let v = &eig.eigenvectors;
        let d = v
            * nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -beta * l).exp()))
            * v.adjoint();
        for a in 0..9 {
            for b in 0..9 {
                let w = wigner_small_d(two_j, 2 * a as i32 - 8, 2 * b as i32 - 8, beta);
                assert!((d[(a, b)].re - w).abs() < 1e-12 && d[(a, b)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transition_from_top_is_binomial() {
        for q in [0.0, 0.13, 0.5, 0.91, 1.0] {
            let p = lz_transition_probabilities(8, 8, q).unwrap();
            let b = binomial_populations(8, q);
            for (x, y) in p.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(lz_transition_probabilities(8, 3, 0.5).is_err());
        assert!(lz_transition_probabilities(8, 8, 1.5).is_err());
    }

    #[test]
    fn spin_j_tdse_factorizes() {
        let rate = 1e12;
        for omega in [4e5, 8e5] {
            let pops = lz_tdse_populations(8, omega, rate, 50.0, 1e-10).unwrap();
            let q = fit_binomial_q(&pops).unwrap();
            let q2 = lz_two_level(omega, rate).unwrap();
            assert!((q - q2).abs() < 2e-3, "fit {q} vs {q2}");
            let b = binomial_populations(8, q);
            let tv: f64 = pops.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
            assert!(tv < 2e-3, "tv {tv}");
        }
    }

    proptest! {
        #[test]
        fn transition_probabilities_normalized(q in 0.0f64..=1.0, two_j in 1u32..10, pick in 0u32..10) {
            let k = pick % (two_j + 1);
            let two_m0 = 2 * k as i32 - two_j as i32;
            let p = lz_transition_probabilities(two_j, two_m0, q).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x >= -1e-15));
        }

        #[test]
        fn binomial_fit_recovers_q(q in 0.0f64..=1.0, two_j in 1u32..10) {
            let q2 = fit_binomial_q(&binomial_populations(two_j, q)).unwrap();
            prop_assert!((q - q2).abs() < 1e-12);
        }

        #[test]
        fn lz_probability_in_unit_interval(omega in 0.0f64..1e7, rate in 1e6f64..1e15) {
            let q = lz_two_level(omega, rate).unwrap();
            prop_assert!((0.0..=1.0).contains(&q));
        }
    }
}
