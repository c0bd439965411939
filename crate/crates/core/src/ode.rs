//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! The integrator is generic over [`OdeState`] so the same stepper drives the
//! classical oscillator (real vectors), the covariance ODE and the vectorised
//! density matrix (complex vectors). Steps are clamped so that every requested
//! output time is hit exactly; no interpolation is involved.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Vector-space operations needed by the stepper.
pub trait OdeState: Clone {
    fn zeros_like(&self) -> Self;
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn assign(&mut self, other: &Self);
    fn scale(&mut self, a: f64);
    /// RMS of `err / (atol + rtol * max(|y0|, |y1|))` over all components.
    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64;
}

impl OdeState for Vec<f64> {
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, xi) in self.iter_mut().zip(x) {
            *s += a * xi;
        }
    }

    fn assign(&mut self, other: &Self) {
        self.copy_from_slice(other);
    }

    fn scale(&mut self, a: f64) {
        for s in self.iter_mut() {
            *s *= a;
        }
    }

    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0;
        for ((e, a), b) in err.iter().zip(y0).zip(y1) {
            let sc = atol + rtol * a.abs().max(b.abs());
            acc += (e / sc).powi(2);
        }
        (acc / err.len().max(1) as f64).sqrt()
    }
}

impl OdeState for Vec<Complex64> {
    fn zeros_like(&self) -> Self {
        vec![Complex64::new(0.0, 0.0); self.len()]
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, xi) in self.iter_mut().zip(x) {
            s.re += a * xi.re;
            s.im += a * xi.im;
        }
    }

    fn assign(&mut self, other: &Self) {
        self.copy_from_slice(other);
    }

    fn scale(&mut self, a: f64) {
        for s in self.iter_mut() {
            *s *= a;
        }
    }

    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0;
        for ((e, a), b) in err.iter().zip(y0).zip(y1) {
            let sc = atol + rtol * a.norm().max(b.norm());
            acc += e.norm_sqr() / (sc * sc);
        }
        (acc / err.len().max(1) as f64).sqrt()
    }
}

/// Counters reported after a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Dormand–Prince 5(4) with FSAL and step-size control.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    /// Integrates `dy/dt = f(t, y)` from `t0` through every time in `t_out`
    /// (which must be non-decreasing and start at or after `t0`). `on_sample`
    /// is invoked with each output time and state; returning an error aborts
    /// the run.
    pub fn integrate<Y, F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: Y,
        t_out: &[f64],
        mut on_sample: S,
    ) -> Result<StepStats>
    where
        Y: OdeState,
        F: FnMut(f64, &Y, &mut Y),
        S: FnMut(f64, &Y) -> Result<()>,
    {
        let mut stats = StepStats::default();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = y.zeros_like();
        let mut k2 = y.zeros_like();
        let mut k3 = y.zeros_like();
        let mut k4 = y.zeros_like();
        let mut k5 = y.zeros_like();
        let mut k6 = y.zeros_like();
        let mut k7 = y.zeros_like();
        let mut stage = y.zeros_like();
        let mut y_new = y.zeros_like();
        let mut err = y.zeros_like();

        f(t, &y, &mut k1);
        stats.evaluations += 1;

        let t_final = t_out.last().copied().unwrap_or(t0);
        let mut h = match self.h_init {
            Some(h) => h,
            None => self.initial_step(&mut f, t, &y, &k1, &mut stage, &mut k2, t_final - t0),
        };
        stats.evaluations += usize::from(self.h_init.is_none());

        for &target in t_out {
            while t < target {
                if stats.accepted + stats.rejected >= self.max_steps {
                    return Err(Error::StepFailure { t, h });
                }
                let remaining = target - t;
                let mut step = h.min(self.h_max);
                let hit_target = step >= remaining * (1.0 - 1e-12);
                if hit_target {
                    step = remaining;
                }
                if step <= 1e-14 * t.abs().max(1.0) && !hit_target {
                    return Err(Error::StepFailure { t, h: step });
                }

                stage.assign(&y);
                stage.axpy(step * A21, &k1);
                f(t + C2 * step, &stage, &mut k2);

                stage.assign(&y);
                stage.axpy(step * A31, &k1);
                stage.axpy(step * A32, &k2);
                f(t + C3 * step, &stage, &mut k3);

                stage.assign(&y);
                stage.axpy(step * A41, &k1);
                stage.axpy(step * A42, &k2);
                stage.axpy(step * A43, &k3);
                f(t + C4 * step, &stage, &mut k4);

                stage.assign(&y);
                stage.axpy(step * A51, &k1);
                stage.axpy(step * A52, &k2);
                stage.axpy(step * A53, &k3);
                stage.axpy(step * A54, &k4);
                f(t + C5 * step, &stage, &mut k5);

                stage.assign(&y);
                stage.axpy(step * A61, &k1);
                stage.axpy(step * A62, &k2);
                stage.axpy(step * A63, &k3);
                stage.axpy(step * A64, &k4);
                stage.axpy(step * A65, &k5);
                f(t + step, &stage, &mut k6);

                y_new.assign(&y);
                y_new.axpy(step * B1, &k1);
                y_new.axpy(step * B3, &k3);
                y_new.axpy(step * B4, &k4);
                y_new.axpy(step * B5, &k5);
                y_new.axpy(step * B6, &k6);
                f(t + step, &y_new, &mut k7);
                stats.evaluations += 6;

                err.assign(&k1);
                err.scale(step * E1);
                err.axpy(step * E3, &k3);
                err.axpy(step * E4, &k4);
                err.axpy(step * E5, &k5);
                err.axpy(step * E6, &k6);
                err.axpy(step * E7, &k7);
                let norm = Y::error_norm(&err, &y, &y_new, self.atol, self.rtol);

                if norm.is_finite() && norm <= 1.0 {
                    stats.accepted += 1;
                    t = if hit_target { target } else { t + step };
                    std::mem::swap(&mut y, &mut y_new);
                    std::mem::swap(&mut k1, &mut k7);
                    let fac = if norm == 0.0 {
                        5.0
                    } else {
                        (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // a step clamped to an output time says nothing about the
                    // natural step size, so do not let it shrink h
                    h = if hit_target { h.max(step * fac) } else { step * fac };
                } else {
                    stats.rejected += 1;
                    let fac = if norm.is_finite() {
                        (0.9 * norm.powf(-0.2)).clamp(0.1, 1.0)
                    } else {
                        0.1
                    };
                    h = step * fac;
                }
            }
            on_sample(t, &y)?;
        }
        Ok(stats)
    }

    #[allow(clippy::too_many_arguments)]
    fn initial_step<Y, F>(
        &self,
        f: &mut F,
        t: f64,
        y: &Y,
        dy: &Y,
        scratch: &mut Y,
        dy1: &mut Y,
        span: f64,
    ) -> f64
    where
        Y: OdeState,
        F: FnMut(f64, &Y, &mut Y),
    {
        let zero = y.zeros_like();
        let d0 = Y::error_norm(y, &zero, y, self.atol, self.rtol);
        let d1 = Y::error_norm(dy, &zero, y, self.atol, self.rtol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span.abs().max(1e-12));
        scratch.assign(y);
        scratch.axpy(h0, dy);
        f(t + h0, scratch, dy1);
        let mut diff = dy1.clone();
        diff.axpy(-1.0, dy);
        let d2 = Y::error_norm(&diff, &zero, y, self.atol, self.rtol) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.h_max)
    }
}
