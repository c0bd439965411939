//! Classical solution of the modulated oscillator `f'' + ν(t)² f = 0` with
//! `ν(t) = ν0 + ε' cos(2ωt)`.
//!
//! The first-order (in ε) closed form is the basis of the Floquet ladder
//! operators; [`numeric_f`] integrates the same equation directly and serves
//! as its oracle.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::Dopri5;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Perturbative ceiling on `|eps|`.
pub const EPS_MAX: f64 = 0.2;
/// Above this `|eps|` a warning is logged.
pub const EPS_WARN: f64 = 0.1;

/// Modulated mechanical oscillator together with its bath parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalDrive {
    /// Mean mechanical angular frequency ν0.
    pub nu0: f64,
    /// Modulation half-frequency ω (the drive is `cos 2ωt`).
    pub omega: f64,
    /// Integer ratio ν0/ω.
    pub n: u32,
    /// Dimensionless strength `ε = 2 ε' ν0 / ω²`.
    pub eps: f64,
    /// Raw modulation amplitude ε'.
    pub eps_prime: f64,
    /// Mechanical energy decay rate γ.
    pub gamma: f64,
    /// Effective thermal-bath occupation.
    pub n_m: f64,
}

/// Builds a drive from physical frequencies, enforcing `ν0 = n ω`.
pub fn drive_from_physical(
    nu0: f64,
    eps_prime: f64,
    omega: f64,
    gamma: f64,
    n_m: f64,
) -> Result<MechanicalDrive> {
    if !(nu0 > 0.0 && nu0.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "nu0",
            reason: format!("must be positive and finite, got {nu0}"),
        });
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: format!("must be positive and finite, got {omega}"),
        });
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be non-negative, got {gamma}"),
        });
    }
    if !(n_m >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "n_m",
            reason: format!("must be non-negative, got {n_m}"),
        });
    }
    let ratio = nu0 / omega;
    let n = ratio.round();
    let sq = ratio * ratio;
    if n < 1.0 || (sq - n * n).abs() > 1e-9 * n * n {
        return Err(Error::NonIntegerRatio { ratio });
    }
    let eps = 2.0 * eps_prime * nu0 / (omega * omega);
    if !eps.is_finite() || eps.abs() > EPS_MAX {
        return Err(Error::DriveTooStrong { eps });
    }
    if eps.abs() > EPS_WARN {
        log::warn!("drive strength eps = {eps:.4} is outside the comfortably perturbative range");
    }
    Ok(MechanicalDrive {
        nu0,
        omega,
        n: n as u32,
        eps,
        eps_prime,
        gamma,
        n_m,
    })
}

impl MechanicalDrive {
    /// Builds a drive from the dimensionless strength ε and the integer `n`.
    pub fn from_eps(nu0: f64, n: u32, eps: f64, gamma: f64, n_m: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::NonIntegerRatio { ratio: 0.0 });
        }
        let omega = nu0 / n as f64;
        drive_from_physical(nu0, eps * omega * omega / (2.0 * nu0), omega, gamma, n_m)
    }

    /// The same oscillator without modulation.
    pub fn undriven(&self) -> Self {
        Self {
            eps: 0.0,
            eps_prime: 0.0,
            ..*self
        }
    }

    /// Modulation period π/ω.
    pub fn period(&self) -> f64 {
        PI / self.omega
    }

    fn check_order(&self) -> Result<()> {
        if self.n == 1 && self.eps != 0.0 {
            Err(Error::DegenerateOrder)
        } else {
            Ok(())
        }
    }

    /// Sideband weights `ε/(8(n+1))` and `ε/(8(n−1))`; the latter is zero when
    /// ε vanishes (including at n = 1).
    pub(crate) fn sideband_weights(&self) -> Result<(f64, f64)> {
        self.check_order()?;
        let n = self.n as f64;
        let upper = self.eps / (8.0 * (n + 1.0));
        let lower = if self.eps == 0.0 {
            0.0
        } else {
            self.eps / (8.0 * (n - 1.0))
        };
        Ok((upper, lower))
    }
}

/// Classical solution and derived coefficients at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetFunctions {
    pub t: f64,
    pub f: Complex64,
    pub fdot: Complex64,
    pub g: Complex64,
    pub h: Complex64,
    /// Wronskian `Im(f* f')`.
    pub w: f64,
}

/// First-order closed-form solution `f(t)` and its exact derivative.
pub fn analytic_f(drive: &MechanicalDrive, t: f64) -> Result<FloquetFunctions> {
    let (up, lo) = drive.sideband_weights()?;
    let n = drive.n as f64;
    let w = drive.omega;
    let norm = 1.0 / (n * w).sqrt();
    let e0 = (I * n * w * t).exp();
    let ep = (I * (n + 2.0) * w * t).exp();
    let em = (I * (n - 2.0) * w * t).exp();
    let f = norm * (e0 + up * ep - lo * em);
    let fdot = norm * I * w * (n * e0 + up * (n + 2.0) * ep - lo * (n - 2.0) * em);
    let (g, h) = gh(drive, t)?;
    Ok(FloquetFunctions {
        t,
        f,
        fdot,
        g,
        h,
        w: wronskian(f, fdot),
    })
}

/// Phase-removed coefficients `g = e^{-inωt} f` and `h = e^{-inωt} f'`.
pub fn gh(drive: &MechanicalDrive, t: f64) -> Result<(Complex64, Complex64)> {
    let (up, lo) = drive.sideband_weights()?;
    let n = drive.n as f64;
    let w = drive.omega;
    let norm = 1.0 / (n * w).sqrt();
    let e2 = (I * 2.0 * w * t).exp();
    let e2c = e2.conj();
    let g = norm * (1.0 + up * e2 - lo * e2c);
    let h = norm * I * w * (n + up * (n + 2.0) * e2 - lo * (n - 2.0) * e2c);
    Ok((g, h))
}

/// Wronskian of a classical solution, `Im(f* · f')`.
///
/// With the unit normalisation of [`analytic_f`], `W = 1` and `W/|f|² = ν0`
/// in the undriven limit.
pub fn wronskian(f: Complex64, fdot: Complex64) -> f64 {
    (f.conj() * fdot).im
}

/// Options for the numerical oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericOptions {
    /// Integrate `(ν0 + ε' cos 2ωt)²` instead of the linearised
    /// `ν0² + 2ε'ν0 cos 2ωt`.
    pub exact_frequency: bool,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            exact_frequency: false,
            rtol: 1e-10,
            atol: 1e-13,
        }
    }
}

/// Integrates the oscillator equation on `t_grid` (which must start at 0),
/// starting from the closed-form values at `t = 0`.
pub fn numeric_f(
    drive: &MechanicalDrive,
    t_grid: &[f64],
    opts: NumericOptions,
) -> Result<Vec<FloquetFunctions>> {
    match t_grid.first() {
        Some(&t0) if t0 == 0.0 => {}
        _ => {
            return Err(Error::InvalidParameter {
                name: "t_grid",
                reason: "time grid must be non-empty and start at 0".into(),
            })
        }
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter {
            name: "t_grid",
            reason: "time grid must be non-decreasing".into(),
        });
    }
    let start = analytic_f(drive, 0.0)?;
    let nu0 = drive.nu0;
    let ep = drive.eps_prime;
    let two_w = 2.0 * drive.omega;
    let exact = opts.exact_frequency;
    let freq_sq = move |t: f64| {
        let c = (two_w * t).cos();
        if exact {
            (nu0 + ep * c).powi(2)
        } else {
            nu0 * nu0 + 2.0 * ep * nu0 * c
        }
    };
    let y0 = vec![start.f.re, start.f.im, start.fdot.re, start.fdot.im];
    let solver = Dopri5::with_tolerances(opts.rtol, opts.atol);
    let mut out = Vec::with_capacity(t_grid.len());
    solver.integrate(
        |t, y: &Vec<f64>, dy: &mut Vec<f64>| {
            let k = freq_sq(t);
            dy[0] = y[2];
            dy[1] = y[3];
            dy[2] = -k * y[0];
            dy[3] = -k * y[1];
        },
        0.0,
        y0,
        t_grid,
        |t, y| {
            let f = Complex64::new(y[0], y[1]);
            let fdot = Complex64::new(y[2], y[3]);
            let phase = (-I * drive.n as f64 * drive.omega * t).exp();
            out.push(FloquetFunctions {
                t,
                f,
                fdot,
                g: phase * f,
                h: phase * fdot,
                w: wronskian(f, fdot),
            });
            Ok(())
        },
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fig1_drive_from_physical() {
        let d = drive_from_physical(2.0, 1.0 / 72.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(d.n, 2);
        assert_relative_eq!(d.eps, 1.0 / 18.0, max_relative = 1e-15);
    }

    #[test]
    fn undriven_drive() {
        let d = drive_from_physical(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(d.n, 1);
        assert_eq!(d.eps, 0.0);
    }

    #[test]
    fn rejects_non_integer_ratio_and_strong_drive() {
        assert!(matches!(
            drive_from_physical(1.5, 0.0, 1.0, 0.0, 0.0),
            Err(Error::NonIntegerRatio { .. })
        ));
        // eps = 2 * 0.2 * 1 / 1 = 0.4
        assert!(matches!(
            drive_from_physical(1.0, 0.2, 1.0, 0.0, 0.0),
            Err(Error::DriveTooStrong { .. })
        ));
        assert!(drive_from_physical(-1.0, 0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn eps_relation_is_exact() {
        let d = MechanicalDrive::from_eps(1.0, 2, 1.0 / 18.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(d.eps, 2.0 * d.eps_prime * d.nu0 / (d.omega * d.omega), max_relative = 1e-15);
        assert_relative_eq!(d.omega, 0.5);
    }

    #[test]
    fn analytic_values_at_origin() {
        let d = drive_from_physical(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let ff = analytic_f(&d, 0.0).unwrap();
        assert_relative_eq!(ff.f.re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(ff.f.im, 0.0, epsilon = 1e-15);

        let d = drive_from_physical(2.0, 1.0 / 72.0, 1.0, 0.0, 0.0).unwrap();
        let ff = analytic_f(&d, 0.0).unwrap();
        let expected = (1.0 - 1.0 / 216.0) / 2f64.sqrt();
        assert_relative_eq!(ff.f.re, expected, epsilon = 1e-15);
        let (g, _) = gh(&d, 0.0).unwrap();
        assert_relative_eq!(g.re, expected, epsilon = 1e-15);
        assert_relative_eq!(g.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn undriven_modulus_and_coefficients() {
        for n in 1..5u32 {
            let d = MechanicalDrive::from_eps(1.3, n, 0.0, 0.0, 0.0).unwrap();
            for k in 0..7 {
                let t = 0.37 * k as f64;
                let ff = analytic_f(&d, t).unwrap();
                assert_relative_eq!(ff.f.norm(), 1.0 / (1.3f64).sqrt(), max_relative = 1e-14);
                let (g, h) = gh(&d, t).unwrap();
                assert_relative_eq!(g.re, 1.0 / 1.3f64.sqrt(), max_relative = 1e-14);
                assert_relative_eq!(h.im, 1.3f64.sqrt(), max_relative = 1e-14);
                assert!(g.im.abs() < 1e-15 && h.re.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn n_one_with_drive_is_degenerate() {
        let d = MechanicalDrive {
            nu0: 1.0,
            omega: 1.0,
            n: 1,
            eps: 0.01,
            eps_prime: 0.005,
            gamma: 0.0,
            n_m: 0.0,
        };
        assert_eq!(analytic_f(&d, 0.0), Err(Error::DegenerateOrder));
        assert_eq!(gh(&d, 0.0).map(|_| ()), Err(Error::DegenerateOrder));
    }

    #[test]
    fn gh_is_phase_removed_f_and_fdot() {
        let d = MechanicalDrive::from_eps(1.0, 2, 1.0 / 18.0, 0.0, 0.0).unwrap();
        for k in 0..20 {
            let t = 0.31 * k as f64;
            let ff = analytic_f(&d, t).unwrap();
            let phase = (-I * 2.0 * d.omega * t).exp();
            assert!((phase * ff.f - ff.g).norm() < 1e-12);
            assert!((phase * ff.fdot - ff.h).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_removed_solution_is_periodic() {
        let d = MechanicalDrive::from_eps(1.0, 3, -1.0 / 36.0, 0.0, 0.0).unwrap();
        let (g0, h0) = gh(&d, 0.0).unwrap();
        let (g1, h1) = gh(&d, d.period()).unwrap();
        assert!((g0 - g1).norm() < 1e-14);
        assert!((h0 - h1).norm() < 1e-14);
    }

    #[test]
    fn wronskian_undriven_and_driven_bounds() {
        let d = drive_from_physical(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let ff = analytic_f(&d, 0.4).unwrap();
        assert_relative_eq!(ff.w, 1.0, max_relative = 1e-14);
        assert_relative_eq!(ff.w / ff.f.norm_sqr(), d.nu0, max_relative = 1e-14);

        let d = drive_from_physical(2.0, 1.0 / 72.0, 1.0, 0.0, 0.0).unwrap();
        let eps = d.eps;
        let bound = d.nu0 * (eps * eps + eps / 4.0);
        for k in 0..64 {
            let t = d.period() * k as f64 / 64.0;
            let ff = analytic_f(&d, t).unwrap();
            assert!((ff.w / ff.f.norm_sqr() - d.nu0).abs() <= bound, "t={t}");
        }
    }

    #[test]
    fn numeric_undriven_is_plain_rotation() {
        let d = drive_from_physical(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let grid: Vec<f64> = (0..=200).map(|k| 20.0 * PI * k as f64 / 200.0).collect();
        let traj = numeric_f(&d, &grid, NumericOptions::default()).unwrap();
        for s in traj {
            assert!((s.f - (I * s.t).exp()).norm() < 1e-8, "t={}", s.t);
        }
    }

    #[test]
    fn numeric_wronskian_is_conserved() {
        let d = MechanicalDrive::from_eps(1.0, 2, 1.0 / 18.0, 0.0, 0.0).unwrap();
        let grid: Vec<f64> = (0..=100).map(|k| 10.0 * d.period() * k as f64 / 100.0).collect();
        for exact in [false, true] {
            let opts = NumericOptions {
                exact_frequency: exact,
                ..Default::default()
            };
            let traj = numeric_f(&d, &grid, opts).unwrap();
            let w0 = traj[0].w;
            for s in &traj {
                assert!(((s.w - w0) / w0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn numeric_grid_must_start_at_zero() {
        let d = drive_from_physical(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert!(numeric_f(&d, &[0.5, 1.0], NumericOptions::default()).is_err());
        assert!(numeric_f(&d, &[], NumericOptions::default()).is_err());
    }
}
