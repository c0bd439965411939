//! Cooling of a parametrically driven optomechanical cavity.
//!
//! The crate is organised bottom-up:
//!
//! * [`floquet`] – classical solution of the modulated oscillator and the
//!   coefficient functions of the Floquet ladder operators;
//! * [`operators`] – dense operators on truncated Fock spaces;
//! * [`model`] – Floquet operators Γ(t), the displaced-frame Hamiltonian and
//!   the full Liouvillian;
//! * [`lindblad`] – brute-force time evolution of the full master equation;
//! * [`damping`] – damping basis of the leaky-cavity Liouvillian;
//! * [`cooling`] – cooling/heating rates, covariance dynamics and phonon
//!   number predictions.
//!
//! Units: ħ = M = 1, and the CLI expresses every frequency in units of ν0.

pub mod cooling;
pub mod damping;
pub mod error;
pub mod floquet;
pub mod lindblad;
pub mod model;
pub mod ode;
pub mod operators;

pub use cooling::{CovarianceState, RateSet};
pub use error::{Error, Result};
pub use floquet::{drive_from_physical, FloquetFunctions, MechanicalDrive};
pub use lindblad::Trajectory;
pub use model::{CavityConfig, EffectiveCoupling, ModelParams};
pub use operators::{DenseOperator, DensityMatrix};
