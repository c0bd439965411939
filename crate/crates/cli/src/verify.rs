//! Self-checks of the library against closed forms and independent oracles.

use std::fmt;
use std::time::Instant;

use optomech::cooling::{
    argmin, covariance_evolve, crossing_detuning, m_bar, m_bar_quadrature, m_bar_weak, mean_m, rates,
    trace_analytic, RateSet,
};
use optomech::damping::{damping_eigenstate, eigen_residuals, left_state, pairing, right_state, CavityGenerator};
use optomech::floquet::{analytic_f, numeric_f, NumericOptions};
use optomech::lindblad::{
    default_initial_state, dominant_frequency, evolve_with, period_average, EvolveOptions, FastGenerator, Frame,
};
use optomech::model::{gamma_op, liouvillian_apply};
use optomech::operators::commutator;
use optomech::{CavityConfig, CovarianceState, DenseOperator, EffectiveCoupling, MechanicalDrive, ModelParams};

use crate::config::{Engine, Scenario};
use crate::engines::run_engine;

type CheckResult = Result<(bool, String), String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub level: Level,
    /// Fock cutoffs of the full-model checks.
    pub cav_dim: usize,
    pub mech_dim: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            level: Level::Fast,
            cav_dim: 12,
            mech_dim: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<34} {:>7.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

const KAPPA: f64 = 0.25;
const G_FIG: f64 = 0.5;
const EPS: f64 = 1.0 / 18.0;

fn cavity(delta: f64, kappa: f64) -> CavityConfig {
    CavityConfig {
        delta,
        kappa,
        n_p: 0.0,
        pump: 1.0,
        chi0: 1.0,
    }
}

fn rate_set(delta: f64, eps: f64, kappa: f64, g: f64) -> optomech::Result<(MechanicalDrive, RateSet)> {
    let drive = MechanicalDrive::from_eps(1.0, 2, eps, 0.0, 0.0)?;
    let cfg = cavity(delta, kappa);
    let coupling = EffectiveCoupling::from_g_eff(g, &cfg)?;
    Ok((drive, rates(&drive, &cfg, &coupling)?))
}

fn fig_m_bar(delta: f64, eps: f64) -> optomech::Result<f64> {
    let (d, rs) = rate_set(delta, eps, KAPPA, G_FIG)?;
    m_bar(&rs, eps, d.omega)
}

fn s<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn mathieu_oracle() -> CheckResult {
    let d = MechanicalDrive::from_eps(1.0, 2, EPS, 0.0, 0.0).map_err(s)?;
    let grid: Vec<f64> = (0..=400).map(|k| d.period() * k as f64 / 400.0).collect();
    let num = numeric_f(&d, &grid, NumericOptions::default()).map_err(s)?;
    let mut dev = 0f64;
    let mut scale = 0f64;
    for st in &num {
        let a = analytic_f(&d, st.t).map_err(s)?;
        dev = dev.max((a.f - st.f).norm());
        scale = scale.max(st.f.norm());
    }
    let rel = dev / scale;
    let tol = 5.0 * EPS * EPS;
    Ok((rel <= tol, format!("max rel deviation {rel:.3e} (tol {tol:.3e})")))
}

fn commutator_check() -> CheckResult {
    let d = MechanicalDrive::from_eps(1.0, 2, EPS, 0.0, 0.0).map_err(s)?;
    let mut worst = 0f64;
    for k in 0..20 {
        let t = d.period() * (k as f64 * 0.618_033_988_7).fract();
        let g = gamma_op(&d, t, 16).map_err(s)?;
        let c = commutator(&g, &g.dagger()).map_err(s)?;
        let block = c.leading_block(10);
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((block[(i, j)] - want).norm());
            }
        }
    }
    Ok((worst <= 1e-10, format!("max |[Γ,Γ†] − 1| = {worst:.3e} on 10 levels, 20 times")))
}

fn damping_residuals() -> CheckResult {
    let mut worst = 0f64;
    for np in [0.0, 0.5] {
        let gen = CavityGenerator {
            omega_c: 1.3,
            kappa: 0.4,
            n_p: np,
            dim: 16,
        };
        for n in 0..=6usize {
            let jm = 6 - n as i64;
            for j in -jm..=jm {
                let st = damping_eigenstate(n, j, gen.omega_c, gen.kappa, np, gen.dim).map_err(s)?;
                let (r, l) = eigen_residuals(&gen, &st).map_err(s)?;
                worst = worst.max(r).max(l);
            }
        }
    }
    Ok((worst <= 1e-8, format!("max eigen-residual {worst:.3e} (n+|j| ≤ 6, n_p ∈ {{0, 0.5}})")))
}

fn biorthonormality(np: f64, dim: usize) -> CheckResult {
    let mut idx = Vec::new();
    for n in 0..=6usize {
        let jm = 6 - n as i64;
        for j in -jm..=jm {
            idx.push((n, j));
        }
    }
    let rights: Vec<DenseOperator> = idx
        .iter()
        .map(|&(n, j)| right_state(n, j, np, dim))
        .collect::<Result<_, _>>()
        .map_err(s)?;
    let lefts: Vec<DenseOperator> = idx
        .iter()
        .map(|&(n, j)| left_state(n, j, np, dim))
        .collect::<Result<_, _>>()
        .map_err(s)?;
    let mut worst = 0f64;
    for (a, r) in rights.iter().enumerate() {
        for (b, l) in lefts.iter().enumerate() {
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((pairing(r, l) - want).norm());
        }
    }
    Ok((worst <= 1e-8, format!("max |Tr[ρ̂ρ̌] − δ| = {worst:.3e} (n_p = {np}, dim {dim})")))
}

fn delta_grid() -> [f64; 5] {
    [-1.2, -1.1, -1.0, -0.9, -0.8]
}

fn eps_grid() -> [f64; 5] {
    [0.0, EPS, -EPS, EPS / 2.0, -EPS / 2.0]
}

fn covariance_grid() -> CheckResult {
    let mut worst = (0f64, 0f64);
    for delta in delta_grid() {
        for eps in eps_grid() {
            let (d, rs) = rate_set(delta, eps, KAPPA, G_FIG).map_err(s)?;
            let period = d.period();
            // late time at phase 2ωt ≡ π
            let t_end = ((rs.transient_time() * 3.0 / period).ceil() + 0.5) * period;
            let traj = covariance_evolve(&rs, &d, &CovarianceState::vacuum(0.0), t_end, period / 8.0).map_err(s)?;
            let num = traj.last().expect("non-empty").trace();
            let closed = trace_analytic(&rs, eps, d.omega, t_end).map_err(s)?;
            let rel = ((closed - num) / num).abs();
            let tol = (eps * eps).max(1e-4);
            if rel / tol > worst.0 / worst.1.max(1e-300) || worst.1 == 0.0 {
                worst = (rel, tol);
            }
        }
    }
    Ok((worst.0 <= worst.1, format!("worst rel error {:.3e} (tol {:.3e}) on 5×5 grid", worst.0, worst.1)))
}

fn quadrature_grid() -> CheckResult {
    let mut worst = 0f64;
    for delta in delta_grid() {
        for eps in eps_grid() {
            let (d, rs) = rate_set(delta, eps, KAPPA, G_FIG).map_err(s)?;
            let a = m_bar(&rs, eps, d.omega).map_err(s)?;
            let b = m_bar_quadrature(&rs, eps, d.omega, 256).map_err(s)?;
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst <= 1e-8, format!("max |closed − quadrature| = {worst:.3e}")))
}

fn sideband_identity() -> CheckResult {
    let mut worst = 0f64;
    for delta in [-1.3, -1.0, -0.9469, -0.7] {
        for kappa in [0.1, 0.25, 0.6] {
            let (_, rs) = rate_set(delta, 0.0, kappa, 0.3).map_err(s)?;
            let m = mean_m(trace_analytic(&rs, 0.0, 0.5, 0.0).map_err(s)?).map_err(s)?;
            let want = ((delta + 1.0f64).powi(2) + kappa * kappa / 4.0) / (-4.0 * delta);
            worst = worst.max(((m - want) / want).abs());
        }
    }
    let (_, rs) = rate_set(-1.0, 0.0, KAPPA, 0.3).map_err(s)?;
    let res = mean_m(trace_analytic(&rs, 0.0, 0.5, 0.0).map_err(s)?).map_err(s)?;
    let ok = worst <= 1e-12 && (res - 3.90625e-3).abs() <= 1e-12 * 3.90625e-3;
    Ok((ok, format!("max rel error {worst:.3e}; δ = −ν0 gives {res:.9e}")))
}

fn weak_formula() -> CheckResult {
    let d = MechanicalDrive::from_eps(1.0, 2, 0.0, 0.0, 0.0).map_err(s)?;
    let cfg = cavity(-1.0, KAPPA);
    let c = EffectiveCoupling::from_g_eff(G_FIG, &cfg).map_err(s)?;
    let v = m_bar_weak(&cfg, &d, &c);
    let dx = MechanicalDrive::from_eps(1.0, 2, EPS, 0.0, 0.0).map_err(s)?;
    let cross = cavity(crossing_detuning(1.0, KAPPA), KAPPA);
    let cx = EffectiveCoupling::from_g_eff(G_FIG, &cross).map_err(s)?;
    let base = m_bar_weak(&cross, &d, &cx);
    let at_cross = m_bar_weak(&cross, &dx, &cx);
    let ok = (v - 3.90625e-3).abs() <= 1e-15 && (at_cross - base).abs() <= 1e-12 * base;
    Ok((ok, format!("resonance {v:.9e}; crossing shift {:.2e}", at_cross - base)))
}

fn crossing() -> CheckResult {
    let dc = crossing_detuning(1.0, KAPPA);
    let diff = |delta: f64| -> optomech::Result<f64> { Ok(fig_m_bar(delta, EPS)? - fig_m_bar(delta, 0.0)?) };
    // bracket the sign change of driven − undriven and bisect
    let (mut a, mut b) = (-1.2, -0.8);
    let (mut fa, fb) = (diff(a).map_err(s)?, diff(b).map_err(s)?);
    if fa * fb > 0.0 {
        return Ok((false, "no sign change over [−1.2, −0.8]".into()));
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        let fm = diff(m).map_err(s)?;
        if fm * fa <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    let root = 0.5 * (a + b);
    Ok(((root - dc).abs() <= 1e-9, format!("crossing at {root:.9} (expected {dc:.9})")))
}

fn sign_structure() -> CheckResult {
    let dc = crossing_detuning(1.0, KAPPA);
    let mut bad = Vec::new();
    for k in 0..=40 {
        let delta = -1.2 + 0.01 * k as f64;
        if (delta - dc).abs() < 1e-3 {
            continue;
        }
        let diff = fig_m_bar(delta, EPS).map_err(s)? - fig_m_bar(delta, 0.0).map_err(s)?;
        let below = delta * delta < 1.0 + KAPPA * KAPPA / 4.0;
        if (diff < 0.0) != below {
            bad.push(format!("{delta:.2}"));
        }
    }
    Ok((
        bad.is_empty(),
        if bad.is_empty() {
            "ε > 0 below undriven inside the crossing, above outside".into()
        } else {
            format!("wrong side at δ = {}", bad.join(", "))
        },
    ))
}

fn slow_drive_limit() -> CheckResult {
    let (_, rs) = rate_set(-0.9469, EPS, KAPPA, G_FIG).map_err(s)?;
    let omega = 1e-6 * rs.gamma_cool;
    let slow = trace_analytic(&rs, EPS, omega, 0.0).map_err(s)?;
    let flat = trace_analytic(&rs, 0.0, omega, 0.0).map_err(s)?;
    let rel = ((slow - flat) / flat).abs();
    Ok((rel <= 1e-6, format!("rel difference {rel:.3e} at ω = 1e-6 Γ_cool")))
}

fn cooling_side() -> CheckResult {
    let mut bad = 0;
    for i in 0..=40 {
        let delta = -2.0 + 0.1 * i as f64;
        if delta.abs() < 1e-9 {
            continue;
        }
        for kappa in [0.05, 0.25, 1.0] {
            let drive = MechanicalDrive::from_eps(1.0, 2, 0.0, 0.0, 0.0).map_err(s)?;
            let cfg = cavity(delta, kappa);
            let c = EffectiveCoupling::from_g_eff(0.1, &cfg).map_err(s)?;
            let rs = rates(&drive, &cfg, &c).map_err(s)?;
            if (rs.gamma_cool > 0.0) != (delta < 0.0) {
                bad += 1;
            }
        }
    }
    Ok((bad == 0, format!("{bad} scan points violate Γ_cool > 0 ⇔ δ < 0")))
}

fn argmin_shift() -> CheckResult {
    let find = |eps: f64| argmin(|d| fig_m_bar(d, eps), -1.2, -0.8, 81);
    let (x0, _) = find(0.0).map_err(s)?;
    let (xp, _) = find(EPS).map_err(s)?;
    let (xm, _) = find(-EPS).map_err(s)?;
    let ok = (xp - x0) * (xm - x0) < 0.0;
    Ok((ok, format!("argmin δ: undriven {x0:.6}, ε>0 {xp:.6}, ε<0 {xm:.6}")))
}

fn undriven_columns() -> CheckResult {
    let text = r#"
schema_version = 1
name = "flat"
engines = ["analytic"]
[drive]
n = 2
eps = 0.0
[cavity]
delta = -0.9469
kappa = 0.25
[coupling]
g_eff = 0.5
"#;
    let sc = Scenario::from_toml_str(text).map_err(s)?;
    let table = run_engine(&sc, Engine::Analytic).map_err(s)?;
    let a = table.select(&["m_driven"]).ok_or("missing column")?.to_csv();
    let b = table.select(&["m_undriven"]).ok_or("missing column")?.to_csv();
    let strip = |c: &str| c.split_once('\n').map(|x| x.1.to_string()).unwrap_or_default();
    Ok((strip(&a) == strip(&b), format!("{} rows compared", table.rows.len())))
}

fn sparse_vs_dense() -> CheckResult {
    let drive = MechanicalDrive::from_eps(1.0, 2, EPS, 0.02, 0.3).map_err(s)?;
    let mut cfg = cavity(-0.9469, KAPPA);
    cfg.n_p = 0.2;
    let coupling = EffectiveCoupling::from_g_eff(0.3, &cfg).map_err(s)?;
    let params = ModelParams {
        drive,
        cavity: cfg,
        coupling,
        cav_dim: 4,
        mech_dim: 5,
    };
    let n = 20;
    let mut rho = optomech::operators::tensor(
        &optomech::operators::thermal_state(4, 0.4),
        &optomech::operators::thermal_state(5, 0.7),
    )
    .into_matrix();
    rho[(1, 6)] += num_complex::Complex64::new(0.01, 0.02);
    rho[(6, 1)] += num_complex::Complex64::new(0.01, -0.02);
    let mut gen = FastGenerator::new(&params, Frame::Lab).map_err(s)?;
    let mut worst = 0f64;
    for t in [0.0, 0.7, 2.9] {
        let dense = liouvillian_apply(&DenseOperator::new(rho.clone(), vec![4, 5]).map_err(s)?, t, &params)
            .map_err(s)?
            .into_matrix();
        let flat: Vec<_> = (0..n * n).map(|k| rho[(k / n, k % n)]).collect();
        let mut out = vec![num_complex::Complex64::new(0.0, 0.0); n * n];
        gen.rhs(t, &flat, &mut out);
        for k in 0..n * n {
            worst = worst.max((out[k] - dense[(k / n, k % n)]).norm());
        }
    }
    Ok((worst <= 1e-12, format!("max |sparse − dense| = {worst:.3e}")))
}

fn fig2_scenario() -> Scenario {
    crate::figures::scenario(crate::figures::Figure::Fig2).expect("built-in scenario parses")
}

fn determinism() -> CheckResult {
    let sc = fig2_scenario();
    let a = run_engine(&sc, Engine::Analytic).map_err(s)?.to_csv();
    let b = run_engine(&sc, Engine::Analytic).map_err(s)?.to_csv();
    Ok((a == b, format!("{} bytes, identical = {}", a.len(), a == b)))
}

/// Outcome of one full-model run at the reference point.
#[derive(Debug, Clone, Copy)]
pub struct FullModelRun {
    pub average: f64,
    pub m_bar: f64,
    pub frequency: f64,
    pub omega: f64,
    pub trace_error: f64,
}

/// Period-averaged ⟨m⟩ of the full master equation at g_eff = 0.05,
/// δ = −0.9469, κ = 0.25, n = 2, ε = 1/18, γ = 0, after the transient.
pub fn full_model_run(cav_dim: usize, mech_dim: usize) -> optomech::Result<FullModelRun> {
    let drive = MechanicalDrive::from_eps(1.0, 2, EPS, 0.0, 0.0)?;
    let cfg = cavity(-0.9469, KAPPA);
    let coupling = EffectiveCoupling::from_g_eff(0.05, &cfg)?;
    let params = ModelParams {
        drive,
        cavity: cfg,
        coupling,
        cav_dim,
        mech_dim,
    };
    let rs = rates(&drive, &cfg, &coupling)?;
    let period = drive.period();
    let window = 4.0 * period;
    let t_end = (rs.transient_time() / period).ceil() * period + window;
    let mut opts = EvolveOptions::new(t_end, period / 64.0);
    opts.record_from = t_end - window;
    opts.transient_end = rs.transient_time();
    let traj = evolve_with(&default_initial_state(&params)?, &params, &opts)?;
    Ok(FullModelRun {
        average: period_average(&traj, "m_mech", period)?,
        m_bar: m_bar(&rs, EPS, drive.omega)?,
        frequency: dominant_frequency(&traj, "m_mech", window)?,
        omega: drive.omega,
        trace_error: traj.max_trace_error(),
    })
}

/// Runs the checks of the requested level in a fixed order.
pub fn run(opts: &VerifyOptions, mut on_check: impl FnMut(&Check)) -> Vec<Check> {
    let fast: Vec<(&'static str, Box<dyn Fn() -> CheckResult>)> = vec![
        ("floquet_mathieu_oracle", Box::new(mathieu_oracle)),
        ("floquet_commutator", Box::new(commutator_check)),
        ("damping_eigen_residuals", Box::new(damping_residuals)),
        ("damping_biorthonormal_np0", Box::new(|| biorthonormality(0.0, 16))),
        ("damping_biorthonormal_np0.5", Box::new(|| biorthonormality(0.5, 60))),
        ("covariance_closed_form_grid", Box::new(covariance_grid)),
        ("m_bar_vs_quadrature", Box::new(quadrature_grid)),
        ("undriven_sideband_limit", Box::new(sideband_identity)),
        ("weak_damping_formula", Box::new(weak_formula)),
        ("crossing_detuning", Box::new(crossing)),
        ("sign_structure", Box::new(sign_structure)),
        ("slow_drive_limit", Box::new(slow_drive_limit)),
        ("cooling_iff_red_detuned", Box::new(cooling_side)),
        ("argmin_shift_opposite", Box::new(argmin_shift)),
        ("eps0_columns_identical", Box::new(undriven_columns)),
        ("sparse_generator_vs_dense", Box::new(sparse_vs_dense)),
        ("csv_determinism", Box::new(determinism)),
    ];
    let mut checks = Vec::new();
    let mut record = |name: &'static str, f: &dyn Fn() -> CheckResult| {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let c = Check {
            name,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_check(&c);
        checks.push(c);
    };
    for (name, f) in &fast {
        record(name, f.as_ref());
    }
    if opts.level == Level::Full {
        let (c, m) = (opts.cav_dim, opts.mech_dim);
        let base = std::cell::OnceCell::new();
        let get_base = || base.get_or_init(|| full_model_run(c, m).map_err(s)).clone();
        record("full_model_vs_m_bar", &|| {
            let r = get_base()?;
            let rel = ((r.average - r.m_bar) / r.m_bar).abs();
            Ok((
                rel <= 0.15,
                format!("⟨m⟩ = {:.6e} vs m_bar = {:.6e}: rel {rel:.3} (tol 0.15)", r.average, r.m_bar),
            ))
        });
        record("full_model_frequency", &|| {
            let r = get_base()?;
            let want = 2.0 * r.omega;
            let ok = (r.frequency - want).abs() <= 1e-9 * want;
            Ok((ok, format!("dominant frequency {:.6} (expected 2ω = {want:.6})", r.frequency)))
        });
        record("full_model_trace", &|| {
            let r = get_base()?;
            Ok((r.trace_error <= 1e-6, format!("max |Tr ρ − 1| = {:.3e}", r.trace_error)))
        });
        record("convergence_gate", &|| {
            let r = get_base()?;
            let big = full_model_run(2 * c, 2 * m).map_err(s)?;
            let rel = ((big.average - r.average) / big.average).abs();
            Ok((
                rel < 0.01,
                format!("cutoffs ({c},{m}) → ({},{}) moves ⟨m⟩ by {rel:.3e} (tol 0.01)", 2 * c, 2 * m),
            ))
        });
    }
    checks
}
