//! The undriven model is linear, so its steady state is Gaussian and its
//! quadrature covariance solves a Lyapunov equation. This gives an oracle for
//! the full master-equation integrator that is independent of the rate theory.

use nalgebra::{DMatrix, DVector, Matrix4};
use optomech::cooling::rates;
use optomech::lindblad::{default_initial_state, evolve_with, EvolveOptions};
use optomech::{CavityConfig, EffectiveCoupling, MechanicalDrive, ModelParams};

/// `⟨b†b⟩` in the steady state of the linearised undriven model.
fn lyapunov_occupation(delta: f64, kappa: f64, n_p: f64, g: f64, gamma: f64, n_m: f64) -> f64 {
    // r = (x_a, p_a, x_b, p_b), H = ½ rᵀ K r with the coupling phase rotated away
    let mut k = Matrix4::zeros();
    k[(0, 0)] = -delta;
    k[(1, 1)] = -delta;
    k[(2, 2)] = 1.0;
    k[(3, 3)] = 1.0;
    k[(0, 2)] = -2.0 * g;
    k[(2, 0)] = -2.0 * g;
    let mut j = Matrix4::zeros();
    for b in [0, 2] {
        j[(b, b + 1)] = 1.0;
        j[(b + 1, b)] = -1.0;
    }
    let damp = Matrix4::from_diagonal(&nalgebra::Vector4::new(kappa, kappa, gamma, gamma)) * 0.5;
    let a = j * k - damp;
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        kappa * (n_p + 0.5),
        kappa * (n_p + 0.5),
        gamma * (n_m + 0.5),
        gamma * (n_m + 0.5),
    ));
    // vec(Aσ + σAᵀ) = (I⊗A + A⊗I) vec σ
    let mut big = DMatrix::<f64>::zeros(16, 16);
    for r in 0..4 {
        for c in 0..4 {
            for s in 0..4 {
                big[(r + 4 * c, s + 4 * c)] += a[(r, s)];
                big[(r + 4 * c, r + 4 * s)] += a[(c, s)];
            }
        }
    }
    let rhs = DVector::from_iterator(16, (0..16).map(|i| -d[(i % 4, i / 4)]));
    let sigma = big.lu().solve(&rhs).expect("stable drift");
    0.5 * (sigma[2 + 4 * 2] + sigma[3 + 4 * 3] - 1.0)
}

fn steady_occupation(delta: f64, g: f64, gamma: f64, n_m: f64, n_p: f64) -> f64 {
    let drive = MechanicalDrive::from_eps(1.0, 2, 0.0, gamma, n_m).unwrap();
    let cavity = CavityConfig {
        delta,
        kappa: 0.25,
        n_p,
        pump: 1.0,
        chi0: 1.0,
    };
    let coupling = EffectiveCoupling::from_g_eff(g, &cavity).unwrap();
    let params = ModelParams {
        drive,
        cavity,
        coupling,
        cav_dim: 8,
        mech_dim: 8,
    };
    let rs = rates(&drive, &cavity, &coupling).unwrap();
    let t_end = 25.0 / (rs.gamma_cool + 0.5 * gamma);
    let mut opts = EvolveOptions::new(t_end, t_end / 8.0);
    opts.rtol = 1e-9;
    opts.atol = 1e-12;
    let traj = evolve_with(&default_initial_state(&params).unwrap(), &params, &opts).expect("integration");
    *traj.observable("m_mech").unwrap().last().unwrap()
}

#[test]
fn lyapunov_solver_reproduces_uncoupled_bath() {
    let occ = lyapunov_occupation(-1.0, 0.25, 0.0, 0.0, 0.1, 0.7);
    assert!((occ - 0.7).abs() < 1e-12);
}

#[test]
fn master_equation_steady_state_is_the_gaussian_one() {
    for (delta, g, gamma, n_m, n_p) in [(-0.9469, 0.1, 0.0, 0.0, 0.0), (-1.0, 0.08, 0.01, 0.1, 0.05)] {
        let full = steady_occupation(delta, g, gamma, n_m, n_p);
        let exact = lyapunov_occupation(delta, 0.25, n_p, g, gamma, n_m);
        assert!(((full - exact) / exact).abs() < 1e-5, "δ={delta}: {full:.9e} vs {exact:.9e}");
    }
}
