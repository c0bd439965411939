//! Adiabatic cooling/heating rates and the resulting phonon-number
//! predictions.
//!
//! After eliminating the cavity, the mechanical mode sees time-periodic
//! rates `Ã±(t) = Ã±0 + ε sin(2ωt) A±ε` and its (isotropic) covariance obeys
//! `dγ/dt = 2(Ã+ − Ã−)γ + (Ã+ + Ã−)I`.

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::floquet::MechanicalDrive;
use crate::model::{CavityConfig, EffectiveCoupling};
use crate::ode::Dopri5;

/// Cooling and heating rates of the reduced mechanical dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub a_minus_0: f64,
    pub a_plus_0: f64,
    pub a_minus_eps: f64,
    pub a_plus_eps: f64,
    /// `A−0 + (γ/2)(n_m + 1)`
    pub a_minus_tilde_0: f64,
    /// `A+0 + (γ/2) n_m`
    pub a_plus_tilde_0: f64,
    /// `A−0 − A+0`
    pub gamma_cool: f64,
    /// Mechanical damping γ, kept for the approximate formulas.
    pub gamma: f64,
    pub n_m: f64,
}

impl RateSet {
    /// `Ã+0 − Ã−0`, negative on the cooling side.
    fn d0(&self) -> f64 {
        self.a_plus_tilde_0 - self.a_minus_tilde_0
    }

    fn s0(&self) -> f64 {
        self.a_plus_tilde_0 + self.a_minus_tilde_0
    }

    fn d_eps(&self) -> f64 {
        self.a_plus_eps - self.a_minus_eps
    }

    fn s_eps(&self) -> f64 {
        self.a_plus_eps + self.a_minus_eps
    }

    /// Errors unless the dressed cooling rate beats the heating rate.
    pub fn check_cooling(&self) -> Result<()> {
        if self.a_minus_tilde_0 > self.a_plus_tilde_0 {
            Ok(())
        } else {
            Err(Error::Heating {
                a_minus: self.a_minus_tilde_0,
                a_plus: self.a_plus_tilde_0,
            })
        }
    }

    /// Time after which the closed forms describe the state (10/Γ_cool).
    pub fn transient_time(&self) -> f64 {
        10.0 / self.gamma_cool
    }
}

/// Rates for a given drive, cavity and effective coupling.
pub fn rates(drive: &MechanicalDrive, cfg: &CavityConfig, coupling: &EffectiveCoupling) -> Result<RateSet> {
    cfg.validate()?;
    let g2 = coupling.g_eff * coupling.g_eff;
    let nu0 = drive.nu0;
    let k = cfg.kappa;
    let n = drive.n as f64;
    let lorentz = |det: f64| det * det + k * k / 4.0;
    let dm = cfg.delta + nu0;
    let dp = cfg.delta - nu0;
    let a_minus_0 = 0.5 * g2 * k / lorentz(dm);
    let a_plus_0 = 0.5 * g2 * k / lorentz(dp);
    let a_minus_eps = 0.5 * g2 * dm / (n * lorentz(dm));
    let a_plus_eps = 0.5 * g2 * dp / (n * lorentz(dp));
    Ok(RateSet {
        a_minus_0,
        a_plus_0,
        a_minus_eps,
        a_plus_eps,
        a_minus_tilde_0: a_minus_0 + 0.5 * drive.gamma * (drive.n_m + 1.0),
        a_plus_tilde_0: a_plus_0 + 0.5 * drive.gamma * drive.n_m,
        gamma_cool: a_minus_0 - a_plus_0,
        gamma: drive.gamma,
        n_m: drive.n_m,
    })
}

/// Instantaneous dressed rates `(Ã−(t), Ã+(t))`.
pub fn rate_at_time(rs: &RateSet, eps: f64, omega: f64, t: f64) -> (f64, f64) {
    let s = eps * (2.0 * omega * t).sin();
    (
        rs.a_minus_tilde_0 + s * rs.a_minus_eps,
        rs.a_plus_tilde_0 + s * rs.a_plus_eps,
    )
}

/// Covariance matrix of the dimensionless mechanical quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceState {
    pub matrix: Matrix2<f64>,
    pub time: f64,
}

impl CovarianceState {
    pub fn new(matrix: Matrix2<f64>, time: f64) -> Result<Self> {
        if (matrix[(0, 1)] - matrix[(1, 0)]).abs() > 1e-12 * matrix.amax().max(1.0) {
            return Err(Error::InvalidState("covariance matrix is not symmetric".into()));
        }
        let tr = matrix.trace();
        if !(tr >= 1.0 - 1e-6) {
            return Err(Error::InvalidTrace { trace: tr });
        }
        Ok(Self { matrix, time })
    }

    /// Ground-state covariance `I/2`.
    pub fn vacuum(time: f64) -> Self {
        Self {
            matrix: Matrix2::identity() * 0.5,
            time,
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

/// Integrates the covariance equation from `gamma0` to `t_end`, sampling every
/// `dt_control` (the last sample lands exactly on `t_end`).
pub fn covariance_evolve(
    rs: &RateSet,
    drive: &MechanicalDrive,
    gamma0: &CovarianceState,
    t_end: f64,
    dt_control: f64,
) -> Result<Vec<CovarianceState>> {
    rs.check_cooling()?;
    if !(t_end > gamma0.time) || !(dt_control > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!(
                "need t_end > t0 and dt_control > 0 (t0={}, t_end={t_end}, dt={dt_control})",
                gamma0.time
            ),
        });
    }
    let t0 = gamma0.time;
    let count = ((t_end - t0) / dt_control).ceil() as usize;
    let mut t_out: Vec<f64> = (1..count).map(|k| t0 + k as f64 * dt_control).collect();
    t_out.push(t_end);

    let (eps, omega) = (drive.eps, drive.omega);
    let rhs = |t: f64, y: &Vec<f64>, dy: &mut Vec<f64>| {
        let (am, ap) = rate_at_time(rs, eps, omega, t);
        let d = 2.0 * (ap - am);
        let s = ap + am;
        dy[0] = d * y[0] + s;
        dy[1] = d * y[1];
        dy[2] = d * y[2] + s;
    };
    let m = gamma0.matrix;
    let y0 = vec![m[(0, 0)], m[(0, 1)], m[(1, 1)]];
    let mut out = Vec::with_capacity(t_out.len() + 1);
    out.push(*gamma0);
    Dopri5::with_tolerances(1e-10, 1e-12).integrate(rhs, t0, y0, &t_out, |t, y| {
        out.push(CovarianceState {
            matrix: Matrix2::new(y[0], y[1], y[1], y[2]),
            time: t,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Late-time trace of the covariance matrix in the five-term closed form.
///
/// Dressed rates appear in the base terms, bare `A±ε` in the corrections.
/// This expression agrees with the late-time solution of the covariance
/// equation to first order in ε only at phases `2ωt ≡ π (mod 2π)`; see
/// [`trace_first_order`] for the periodic first-order solution.
pub fn trace_analytic(rs: &RateSet, eps: f64, omega: f64, t: f64) -> Result<f64> {
    rs.check_cooling()?;
    let d0 = rs.d0();
    let s0 = rs.s0();
    let de = rs.d_eps();
    let se = rs.s_eps();
    let den = d0 * d0 + omega * omega;
    let (sin, cos) = (2.0 * omega * t).sin_cos();
    let mut tr = s0 / -d0;
    tr -= eps * se * d0 * sin / den;
    tr -= eps * se * omega * cos / den;
    tr += eps / omega * de * d0 * s0 / den;
    tr -= eps / omega * de * s0 / d0;
    Ok(tr)
}

/// Periodic first-order (in ε) solution of the covariance equation:
/// `S0/(−D0) − ε c (D0 sin 2ωt + ω cos 2ωt)/(D0² + ω²)` with
/// `c = Sε − Dε S0/D0`.
pub fn trace_first_order(rs: &RateSet, eps: f64, omega: f64, t: f64) -> Result<f64> {
    rs.check_cooling()?;
    let d0 = rs.d0();
    let s0 = rs.s0();
    let c = rs.s_eps() - rs.d_eps() * s0 / d0;
    let (sin, cos) = (2.0 * omega * t).sin_cos();
    Ok(s0 / -d0 - eps * c * (d0 * sin + omega * cos) / (d0 * d0 + omega * omega))
}

/// `⟨m⟩ = (Tr γ − 1)/2`, clamped at zero.
pub fn mean_m(trace: f64) -> Result<f64> {
    if !(trace >= 1.0 - 1e-3) {
        return Err(Error::InvalidTrace { trace });
    }
    Ok((0.5 * (trace - 1.0)).max(0.0))
}

/// Period average of `⟨m⟩` from the constant terms of the closed-form trace.
pub fn m_bar(rs: &RateSet, eps: f64, omega: f64) -> Result<f64> {
    rs.check_cooling()?;
    let d0 = rs.d0();
    let s0 = rs.s0();
    let de = rs.d_eps();
    let constant = s0 / -d0 - eps * omega * de * s0 / (d0 * (d0 * d0 + omega * omega));
    mean_m(constant)
}

/// Period average of `⟨m⟩` by trapezoidal quadrature of [`trace_analytic`]
/// over `[0, π/ω]` with `samples` intervals.
pub fn m_bar_quadrature(rs: &RateSet, eps: f64, omega: f64, samples: usize) -> Result<f64> {
    let samples = samples.max(4);
    let period = PI / omega;
    let h = period / samples as f64;
    // periodic integrand: the trapezoid rule reduces to the plain mean
    let mut sum = 0.0;
    for k in 0..samples {
        sum += trace_analytic(rs, eps, omega, k as f64 * h)?;
    }
    mean_m(sum / samples as f64)
}

/// Small-ω approximation of the period average including the bath term.
pub fn m_bar_approx(rs: &RateSet, eps: f64, omega: f64) -> f64 {
    if omega > 0.3 * rs.gamma_cool {
        log::warn!(
            "m_bar_approx assumes ω ≪ Γ_cool; got ω = {omega:.4e}, Γ_cool = {:.4e}",
            rs.gamma_cool
        );
    }
    let rel = rs.gamma_cool + 0.5 * rs.gamma;
    let de = rs.d_eps();
    let m0 = rs.a_plus_0 / rel
        + eps * omega * (rs.a_minus_0 + rs.a_plus_0 + 0.5 * rs.gamma) / (2.0 * rel.powi(3)) * de;
    let bath = rs.gamma * rs.n_m;
    m0 + bath / rel + eps * omega * bath / (2.0 * rel.powi(3)) * de
}

/// Weak-damping limit (`Ã±0 ≈ A±0`) of the period average, written directly
/// in terms of the model parameters.
pub fn m_bar_weak(cfg: &CavityConfig, drive: &MechanicalDrive, coupling: &EffectiveCoupling) -> f64 {
    let d = cfg.delta;
    let nu = drive.nu0;
    let k2 = cfg.kappa * cfg.kappa / 4.0;
    let g2 = coupling.g_eff * coupling.g_eff;
    let base = -((nu + d).powi(2) + k2) / (4.0 * d * nu);
    let product = (nu * nu - d * d + k2)
        * (nu * nu + d * d + k2)
        * ((nu + d).powi(2) + k2)
        * ((nu - d).powi(2) + k2);
    let pre = drive.eps * drive.omega
        / (32.0 * d.powi(3) * cfg.kappa * cfg.kappa * nu.powi(3) * g2);
    base + pre * product
}

/// Detuning `δ = −√(ν0² + κ²/4)` at which the drive leaves the period
/// average unchanged.
pub fn crossing_detuning(nu0: f64, kappa: f64) -> f64 {
    -(nu0 * nu0 + kappa * kappa / 4.0).sqrt()
}

/// Minimises `f` on `[lo, hi]`: a coarse scan over `samples` points followed
/// by golden-section refinement of the best bracket.
pub fn argmin<F>(f: F, lo: f64, hi: f64, samples: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let samples = samples.max(3);
    let step = (hi - lo) / (samples - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..samples {
        let v = f(lo + k as f64 * step)?;
        if v < best.1 {
            best = (k, v);
        }
    }
    let mut a = lo + best.0.saturating_sub(1) as f64 * step;
    let mut b = (lo + (best.0 + 1) as f64 * step).min(hi);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > 1e-10 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}
