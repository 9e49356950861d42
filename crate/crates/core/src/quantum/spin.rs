use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;

fn two_j_of(j: f64) -> Result<u32> {
    let tj = 2.0 * j;
    if !(j > 0.0) || (tj - tj.round()).abs() > 1e-12 || tj > 200.0 {
        return Err(Error::domain(format!("J = {j} is not a positive (half-)integer")));
    }
    Ok(tj.round() as u32)
}

/// Dense angular momentum matrices in units of ħ, basis ordered m = −J … +J.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMatrices {
    pub jx: DMatrix<C64>,
    pub jy: DMatrix<C64>,
    pub jz: DMatrix<C64>,
}

pub fn angular_momentum_matrices(j: f64) -> Result<SpinMatrices> {
    let ladder = SpinLadder::new(two_j_of(j)?);
    let n = ladder.dim();
    let mut jx = DMatrix::zeros(n, n);
    let mut jy = DMatrix::zeros(n, n);
    let mut jz = DMatrix::zeros(n, n);
    for k in 0..n {
        jz[(k, k)] = C64::new(ladder.m(k), 0.0);
        if k + 1 < n {
            let c = ladder.raise[k];
            // ⟨m+1|J+|m⟩ = c, Jx = (J+ + J−)/2, Jy = (J+ − J−)/2i
            jx[(k + 1, k)] = C64::new(0.5 * c, 0.0);
            jx[(k, k + 1)] = C64::new(0.5 * c, 0.0);
            jy[(k + 1, k)] = C64::new(0.0, -0.5 * c);
            jy[(k, k + 1)] = C64::new(0.0, 0.5 * c);
        }
    }
    Ok(SpinMatrices { jx, jy, jz })
}

/// Tridiagonal representation of the spin operators for O(2J) products
/// `(a·J)ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinLadder {
    two_j: u32,
    /// raise[k] = ⟨m_k + 1| J+ |m_k⟩
    raise: Vec<f64>,
}

impl SpinLadder {
    pub fn new(two_j: u32) -> Self {
        let j = f64::from(two_j) / 2.0;
        let raise = (0..two_j as usize)
            .map(|k| {
                let m = k as f64 - j;
                (j * (j + 1.0) - m * (m + 1.0)).sqrt()
            })
            .collect();
        SpinLadder { two_j, raise }
    }

    pub fn from_j(j: f64) -> Result<Self> {
        Ok(Self::new(two_j_of(j)?))
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    /// Magnetic quantum number of basis index `k`.
    pub fn m(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    /// `out = (a_x Jx + a_y Jy + a_z Jz) ψ`.
    pub fn apply(&self, a: [f64; 3], psi: &DVector<C64>, out: &mut DVector<C64>) {
        let n = self.dim();
        let up = C64::new(0.5 * a[0], -0.5 * a[1]);
        let down = C64::new(0.5 * a[0], 0.5 * a[1]);
        for k in 0..n {
            let mut acc = psi[k] * (a[2] * self.m(k));
            if k > 0 {
                acc += up * (self.raise[k - 1] * psi[k - 1]);
            }
            if k + 1 < n {
                acc += down * (self.raise[k] * psi[k + 1]);
            }
            out[k] = acc;
        }
    }
}

/// Amplitudes over the 2J + 1 Zeeman sublevels, ordered m = −J … +J.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub two_j: u32,
    pub amplitudes: DVector<C64>,
}

impl SpinState {
    pub fn new(two_j: u32, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != two_j as usize + 1 {
            return Err(Error::domain(format!(
                "{} amplitudes given for 2J + 1 = {}",
                amplitudes.len(),
                two_j + 1
            )));
        }
        Ok(SpinState { two_j, amplitudes })
    }

    /// Basis state |m⟩.
    pub fn basis(two_j: u32, m: f64) -> Result<Self> {
        let k = Self::index_of(two_j, m)?;
        let mut amplitudes = DVector::zeros(two_j as usize + 1);
        amplitudes[k] = C64::new(1.0, 0.0);
        Ok(SpinState { two_j, amplitudes })
    }

    /// Basis index of sublevel `m`.
    pub fn index_of(two_j: u32, m: f64) -> Result<usize> {
        let j = f64::from(two_j) / 2.0;
        let k = m + j;
        if !(k >= -1e-9 && k <= f64::from(two_j) + 1e-9) || (k - k.round()).abs() > 1e-9 {
            return Err(Error::domain(format!("m = {m} is not a sublevel of J = {j}")));
        }
        Ok(k.round() as usize)
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &SpinState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let s = angular_momentum_matrices(0.5).unwrap();
        let half = C64::new(0.5, 0.0);
        let ihalf = C64::new(0.0, 0.5);
        let zero = C64::new(0.0, 0.0);
        assert_eq!(s.jx, DMatrix::from_row_slice(2, 2, &[zero, half, half, zero]));
        assert_eq!(s.jy, DMatrix::from_row_slice(2, 2, &[zero, ihalf, -ihalf, zero]));
        assert_eq!(s.jz, DMatrix::from_row_slice(2, 2, &[-half, zero, zero, half]));
    }

    #[test]
    fn commutator_and_casimir() {
        for j in [0.5, 1.0, 1.5, 3.0, 4.0] {
            let s = angular_momentum_matrices(j).unwrap();
            let comm = &s.jx * &s.jy - &s.jy * &s.jx - &s.jz * C64::new(0.0, 1.0);
            assert!(max_abs(&comm) < 1e-12);
            let n = s.jz.nrows();
            let cas = &s.jx * &s.jx + &s.jy * &s.jy + &s.jz * &s.jz
                - DMatrix::<C64>::identity(n, n) * C64::new(j * (j + 1.0), 0.0);
            assert!(max_abs(&cas) < 1e-12);
        }
    }

    #[test]
    fn invalid_j() {
        assert!(angular_momentum_matrices(0.0).is_err());
        assert!(angular_momentum_matrices(1.25).is_err());
    }

    #[test]
    fn ladder_apply_matches_dense() {
        let s = angular_momentum_matrices(4.0).unwrap();
        let ladder = SpinLadder::new(8);
        let psi = DVector::from_fn(9, |k, _| C64::new(k as f64 * 0.3 - 1.0, 0.2 * (k as f64).sin()));
        let a = [0.7, -1.3, 0.4];
        let dense = (&s.jx * C64::new(a[0], 0.0) + &s.jy * C64::new(a[1], 0.0) + &s.jz * C64::new(a[2], 0.0)) * &psi;
        let mut out = DVector::zeros(9);
        ladder.apply(a, &psi, &mut out);
        assert!((dense - out).norm() < 1e-12);
    }

    #[test]
    fn basis_indexing() {
        assert_eq!(SpinState::index_of(8, -4.0).unwrap(), 0);
        assert_eq!(SpinState::index_of(8, 4.0).unwrap(), 8);
        assert_eq!(SpinState::index_of(1, 0.5).unwrap(), 1);
        assert!(SpinState::index_of(8, 5.0).is_err());
        assert!(SpinState::index_of(8, 0.5).is_err());
    }
}
