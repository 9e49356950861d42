//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! Generic over the state type through [`OdeState`], so the same stepper
//! drives the complex spin amplitudes and the real rate equations. The fifth
//! order solution is propagated (local extrapolation) and the embedded fourth
//! order solution supplies the error estimate. The first-same-as-last stage is
//! reused between accepted steps.

use nalgebra::DVector;
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeFailure {
    StepSizeUnderflow,
    TooManySteps,
    NonFinite,
}

impl fmt::Display for OdeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OdeFailure::StepSizeUnderflow => "step size underflow",
            OdeFailure::TooManySteps => "maximum number of steps exceeded",
            OdeFailure::NonFinite => "non-finite state",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeError {
    /// Time reached before the failure.
    pub t: f64,
    pub reason: OdeFailure,
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t = {:e}", self.reason, self.t)
    }
}

impl std::error::Error for OdeError {}

/// Vector-space operations the stepper needs.
pub trait OdeState: Clone {
    /// `self = base + h Σ coeffs[i] ks[i]`, skipping zero coefficients.
    fn set_combination(&mut self, base: &Self, h: f64, coeffs: &[f64], ks: &[Self]);

    /// `self = h Σ coeffs[i] ks[i]`.
    fn set_weighted_sum(&mut self, h: f64, coeffs: &[f64], ks: &[Self]);

    /// Max-norm of `err` scaled by `atol + rtol max(|y0|, |y1|)` componentwise.
    fn scaled_error(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64;

    fn is_finite(&self) -> bool;
}

impl OdeState for f64 {
    fn set_combination(&mut self, base: &Self, h: f64, coeffs: &[f64], ks: &[Self]) {
        let mut acc = 0.0;
        for (c, k) in coeffs.iter().zip(ks) {
            if *c != 0.0 {
                acc += c * k;
            }
        }
        *self = base + h * acc;
    }

    fn set_weighted_sum(&mut self, h: f64, coeffs: &[f64], ks: &[Self]) {
        self.set_combination(&0.0, h, coeffs, ks);
    }

    fn scaled_error(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        err.abs() / (atol + rtol * y0.abs().max(y1.abs()))
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl OdeState for DVector<Complex64> {
    fn set_combination(&mut self, base: &Self, h: f64, coeffs: &[f64], ks: &[Self]) {
        self.copy_from(base);
        for (c, k) in coeffs.iter().zip(ks) {
            if *c != 0.0 {
                self.axpy(Complex64::new(h * c, 0.0), k, Complex64::new(1.0, 0.0));
            }
        }
    }

    fn set_weighted_sum(&mut self, h: f64, coeffs: &[f64], ks: &[Self]) {
        self.fill(Complex64::new(0.0, 0.0));
        for (c, k) in coeffs.iter().zip(ks) {
            if *c != 0.0 {
                self.axpy(Complex64::new(h * c, 0.0), k, Complex64::new(1.0, 0.0));
            }
        }
    }

    fn scaled_error(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        err.iter()
            .zip(y0.iter().zip(y1.iter()))
            .map(|(e, (a, b))| e.norm() / (atol + rtol * a.norm().max(b.norm())))
            .fold(0.0, f64::max)
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the derivative when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: u64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth minus fourth order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Stateful stepper for `dy/dt = f(t, y)`; `f` writes the derivative into its
/// third argument.
pub struct Dopri5<S, F>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
{
    f: F,
    t: f64,
    y: S,
    h: f64,
    k: Vec<S>,
    scratch: S,
    opts: OdeOptions,
    stats: OdeStats,
}

impl<S, F> Dopri5<S, F>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
{
    pub fn new(mut f: F, t0: f64, y0: S, opts: OdeOptions) -> Self {
        let mut k = vec![y0.clone(); 7];
        f(t0, &y0, &mut k[0]);
        Dopri5 {
            f,
            t: t0,
            scratch: y0.clone(),
            y: y0,
            h: opts.h_init.unwrap_or(0.0),
            k,
            opts,
            stats: OdeStats {
                evaluations: 1,
                ..Default::default()
            },
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &S {
        &self.y
    }

    pub fn into_state(self) -> S {
        self.y
    }

    pub fn stats(&self) -> OdeStats {
        self.stats
    }

    fn initial_step(&mut self, span: f64) -> f64 {
        // Hairer–Wanner starting-step heuristic
        let (atol, rtol) = (self.opts.atol, self.opts.rtol);
        let d0 = S::scaled_error(&self.y, &self.y, &self.y, atol, rtol);
        let d1 = S::scaled_error(&self.k[0], &self.y, &self.y, atol, rtol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span);
        self.scratch.set_combination(&self.y, h0, &[1.0], &self.k[..1]);
        let (_, rest) = self.k.split_at_mut(1);
        (self.f)(self.t + h0, &self.scratch, &mut rest[0]);
        self.stats.evaluations += 1;
        let mut diff = self.y.clone();
        diff.set_weighted_sum(1.0, &[-1.0, 1.0], &self.k[..2]);
        let d2 = S::scaled_error(&diff, &self.y, &self.y, atol, rtol) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrate up to exactly `t_end`, stepping adaptively.
    pub fn advance_to(&mut self, t_end: f64) -> Result<(), OdeError> {
        if t_end <= self.t {
            return Ok(());
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(t_end - self.t);
        }
        let mut trial = self.y.clone();
        let mut err = self.y.clone();
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(OdeError {
                    t: self.t,
                    reason: OdeFailure::TooManySteps,
                });
            }
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.opts.h_max);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h <= 1e-14 * self.t.abs().max(remaining) || h < 1e-300 {
                return Err(OdeError {
                    t: self.t,
                    reason: OdeFailure::StepSizeUnderflow,
                });
            }

            for s in 1..7 {
                self.scratch.set_combination(&self.y, h, &A[s][..s], &self.k[..s]);
                let (_, rest) = self.k.split_at_mut(s);
                (self.f)(self.t + C[s] * h, &self.scratch, &mut rest[0]);
            }
            self.stats.evaluations += 6;
            // stage 7 was evaluated at the fifth-order solution stored in scratch
            trial.clone_from(&self.scratch);
            err.set_weighted_sum(h, &E, &self.k);
            let err_norm = S::scaled_error(&err, &self.y, &trial, self.opts.atol, self.opts.rtol);

            if !err_norm.is_finite() || !trial.is_finite() {
                if h < 1e-300 {
                    return Err(OdeError {
                        t: self.t,
                        reason: OdeFailure::NonFinite,
                    });
                }
                self.h = h * MIN_FACTOR;
                self.stats.rejected += 1;
                continue;
            }

            if err_norm <= 1.0 {
                self.t = if last { t_end } else { self.t + h };
                std::mem::swap(&mut self.y, &mut trial);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                let factor = if err_norm == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                // keep the pre-truncation step when the last step was clipped
                self.h = if last { self.h.max(h) } else { h * factor };
            } else {
                self.stats.rejected += 1;
                self.h = h * (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
        }
        Ok(())
    }
}

/// One-shot integration from `t0` to `t1`.
pub fn integrate<S, F>(f: F, t0: f64, y0: S, t1: f64, opts: OdeOptions) -> Result<(S, OdeStats), OdeError>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
{
    let mut solver = Dopri5::new(f, t0, y0, opts);
    solver.advance_to(t1)?;
    let stats = solver.stats();
    Ok((solver.into_state(), stats))
}
