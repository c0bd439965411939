//! Displaced-frame model of the driven optomechanical cavity.
//!
//! The Hilbert space is `cavity ⊗ mechanics`. The mechanical ladder
//! operators are the phase-removed Floquet operators Γ(t), Γ†(t) built from
//! the first-order classical solution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::floquet::{gh, MechanicalDrive};
use crate::operators::{
    annihilation, commutator, dissipator, quadratures, tensor, DenseOperator, DensityMatrix,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Cavity drive and damping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig {
    /// Detuning δ = ω_laser − ω_cav.
    pub delta: f64,
    /// Energy decay rate κ.
    pub kappa: f64,
    /// Thermal photon number of the cavity bath.
    pub n_p: f64,
    /// Pump strength Ω.
    pub pump: f64,
    /// Single-photon coupling χ0.
    pub chi0: f64,
}

impl CavityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("cavity decay rate must be positive, got {}", self.kappa),
            });
        }
        if !(self.n_p >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "n_p",
                reason: format!("bath occupation must be non-negative, got {}", self.n_p),
            });
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "detuning must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Stationary weak-coupling cavity amplitude `α0 = Ω / (2δ + iκ)`.
///
/// The mechanical displacement β0 vanishes at the same order, so it never
/// appears in the model.
pub fn alpha0(cfg: &CavityConfig) -> Complex64 {
    Complex64::new(cfg.pump, 0.0) / Complex64::new(2.0 * cfg.delta, cfg.kappa)
}

/// Linearised coupling `χ0 α0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoupling {
    pub alpha0: Complex64,
    /// `χ0 |α0|`
    pub g_eff: f64,
}

impl EffectiveCoupling {
    /// From the pump and single-photon coupling of `cfg`.
    pub fn from_cavity(cfg: &CavityConfig) -> Self {
        let alpha0 = alpha0(cfg);
        Self {
            alpha0,
            g_eff: cfg.chi0 * alpha0.norm(),
        }
    }

    /// Fixes `χ0|α0| = g_eff`; the phase of α0 is that of `1/(2δ + iκ)`
    /// (positive pump) and `|α0| = g_eff / χ0`.
    pub fn from_g_eff(g_eff: f64, cfg: &CavityConfig) -> Result<Self> {
        if !(cfg.chi0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "chi0",
                reason: "single-photon coupling must be positive to split g_eff".into(),
            });
        }
        if !(g_eff >= 0.0 && g_eff.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "g_eff",
                reason: format!("must be non-negative, got {g_eff}"),
            });
        }
        let phase = Complex64::new(2.0 * cfg.delta, cfg.kappa).inv();
        let phase = if phase.norm() > 0.0 {
            phase / phase.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        Ok(Self {
            alpha0: phase * (g_eff / cfg.chi0),
            g_eff,
        })
    }

    /// Unit-modulus phase of α0 (1 when α0 vanishes).
    pub fn phase(&self) -> Complex64 {
        let r = self.alpha0.norm();
        if r > 0.0 {
            self.alpha0 / r
        } else {
            Complex64::new(1.0, 0.0)
        }
    }
}

/// Everything needed to build the Liouvillian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub drive: MechanicalDrive,
    pub cavity: CavityConfig,
    pub coupling: EffectiveCoupling,
    pub cav_dim: usize,
    pub mech_dim: usize,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        if self.cav_dim < 4 || self.mech_dim < 4 {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: format!(
                    "Fock cutoffs must be at least 4, got ({}, {})",
                    self.cav_dim, self.mech_dim
                ),
            });
        }
        self.drive.sideband_weights().map(|_| ())
    }

    pub fn dims(&self) -> [usize; 2] {
        [self.cav_dim, self.mech_dim]
    }

    /// The undriven counterpart (ε = 0).
    pub fn undriven(&self) -> Self {
        Self {
            drive: self.drive.undriven(),
            ..*self
        }
    }
}

/// Coefficients of `Γ(t) = u b + v b†`, normalised so that `|u|² − |v|² = 1`.
///
/// The first-order coefficient functions satisfy `Im(g* h) = 1 + O(ε²)`;
/// dividing by the square root of this Wronskian makes the commutator exact
/// without changing anything at first order.
pub fn floquet_coefficients(drive: &MechanicalDrive, t: f64) -> Result<(Complex64, Complex64)> {
    let (g, h) = gh(drive, t)?;
    let w = (g.conj() * h).im;
    let s = drive.nu0.sqrt();
    let a = h / s;
    let b = g * s;
    let norm = 1.0 / (2.0 * w.sqrt());
    let u = (a + I * b) / I * norm;
    let v = (a - I * b) / I * norm;
    Ok((u, v))
}

/// Phase-removed Floquet annihilation operator on the mechanical space,
/// `Γ(t) = [√2 h(t) x − √2 g(t) p] / (2i√W)`.
pub fn gamma_op(drive: &MechanicalDrive, t: f64, mech_dim: usize) -> Result<DenseOperator> {
    if mech_dim < 4 {
        return Err(Error::InvalidParameter {
            name: "mech_dim",
            reason: format!("mechanical cutoff must be at least 4, got {mech_dim}"),
        });
    }
    let (g, h) = gh(drive, t)?;
    let w = (g.conj() * h).im;
    let (x, p) = quadratures(mech_dim, drive.nu0)?;
    let sqrt2 = 2f64.sqrt();
    let pre = 1.0 / (2.0 * I * w.sqrt());
    let op = &x.scale(sqrt2 * h * pre) - &p.scale(sqrt2 * g * pre);
    Ok(op)
}

/// Time-dependent interaction weight multiplying `Γ` in
/// `H_int = χ0 F_a (c Γ + c* Γ†)`:
/// `c = 1 + ε e^{−2iωt}/(8(n+1)) − ε e^{2iωt}/(8(n−1))`.
pub fn interaction_weight(drive: &MechanicalDrive, t: f64) -> Result<Complex64> {
    let (up, lo) = drive.sideband_weights()?;
    let e2 = (I * 2.0 * drive.omega * t).exp();
    Ok(1.0 + up * e2.conj() - lo * e2)
}

/// Full-space operators at one instant.
pub struct ModelOperators {
    pub a: DenseOperator,
    pub gamma: DenseOperator,
    pub hamiltonian: DenseOperator,
}

/// Builds the cavity ladder operator, Γ(t) and H(t) on `cavity ⊗ mechanics`.
pub fn model_operators(p: &ModelParams, t: f64) -> Result<ModelOperators> {
    p.validate()?;
    let dims = p.dims();
    let id_c = DenseOperator::identity(&[p.cav_dim]);
    let id_m = DenseOperator::identity(&[p.mech_dim]);
    let a_c = annihilation(p.cav_dim)?;
    let gam_m = gamma_op(&p.drive, t, p.mech_dim)?;

    let a = tensor(&a_c, &id_m);
    let gamma = tensor(&id_c, &gam_m);
    let gamma_d = gamma.dagger();

    let n_a = &a.dagger() * &a;
    let n_gamma = &gamma_d * &gamma;

    let phase = p.coupling.phase();
    let f_a = &a.scale(phase.conj()) + &a.dagger().scale(phase);
    let c = interaction_weight(&p.drive, t)?;
    let f_gamma = &gamma.scale(c) + &gamma_d.scale(c.conj());
    let h_int = (&f_a * &f_gamma).scale_real(p.coupling.g_eff);

    let h = &(&n_a.scale_real(-p.cavity.delta) + &n_gamma.scale_real(p.drive.nu0)) - &h_int;
    debug_assert_eq!(h.dims(), &dims);
    Ok(ModelOperators {
        a,
        gamma,
        hamiltonian: h,
    })
}

/// `H(t) = −δ a†a + ν0 Γ†Γ − H_int(t)`.
pub fn hamiltonian(p: &ModelParams, t: f64) -> Result<DenseOperator> {
    Ok(model_operators(p, t)?.hamiltonian)
}

/// Applies the full Liouvillian to `rho` at time `t` (dense reference route).
pub fn liouvillian_apply(rho: &DenseOperator, t: f64, p: &ModelParams) -> Result<DenseOperator> {
    let ops = model_operators(p, t)?;
    if rho.dims() != ops.hamiltonian.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", ops.hamiltonian.dims()),
            found: format!("{:?}", rho.dims()),
        });
    }
    let kappa = p.cavity.kappa;
    let np = p.cavity.n_p;
    let gamma = p.drive.gamma;
    let nm = p.drive.n_m;
    let mut out = commutator(&ops.hamiltonian, rho)?.scale(-I);
    let terms = [
        (0.5 * kappa * (np + 1.0), ops.a.clone()),
        (0.5 * kappa * np, ops.a.dagger()),
        (0.5 * gamma * (nm + 1.0), ops.gamma.clone()),
        (0.5 * gamma * nm, ops.gamma.dagger()),
    ];
    for (rate, l) in terms {
        if rate != 0.0 {
            out = &out + &dissipator(&l, rho)?.scale_real(rate);
        }
    }
    Ok(out)
}

/// Convenience wrapper for a validated state.
pub fn liouvillian_apply_state(rho: &DensityMatrix, t: f64, p: &ModelParams) -> Result<DenseOperator> {
    liouvillian_apply(rho.op(), t, p)
}
