//! Evaluation engines: time series of ⟨m⟩ and period-averaged sweeps.

use optomech::cooling::{self, covariance_evolve, m_bar, mean_m, rates, trace_analytic};
use optomech::lindblad::{default_initial_state, evolve_with, period_average, EvolveOptions};
use optomech::{CovarianceState, Error, MechanicalDrive, ModelParams};
use rayon::prelude::*;

use crate::config::{Engine, LindbladSpec, Point, Scenario, SweepParameter, TimeSpec};
use crate::table::{format_number, Cell, Table};

/// Failure at one evaluation point.
#[derive(Debug, thiserror::Error)]
#[error("{engine} at {location}: {source}")]
pub struct PointError {
    pub engine: &'static str,
    pub location: String,
    pub source: Error,
}

const ECHO: [&str; 10] = [
    "nu0",
    "n",
    "omega[nu0]",
    "eps",
    "gamma[nu0]",
    "n_m",
    "delta[nu0]",
    "kappa[nu0]",
    "n_p",
    "g_eff[nu0]",
];

fn echo_headers(engine: Engine) -> Vec<&'static str> {
    let mut h = ECHO.to_vec();
    if engine == Engine::FullLindblad {
        h.extend(["cav_dim", "mech_dim"]);
    }
    h
}

fn echo_cells(p: &Point, engine: Engine, lindblad: &LindbladSpec) -> Vec<Cell> {
    let mut c: Vec<Cell> = vec![
        p.drive.nu0.into(),
        p.drive.n.into(),
        p.drive.omega.into(),
        p.drive.eps.into(),
        p.drive.gamma.into(),
        p.drive.n_m.into(),
        p.cavity.delta.into(),
        p.cavity.kappa.into(),
        p.cavity.n_p.into(),
        p.coupling.g_eff.into(),
    ];
    if engine == Engine::FullLindblad {
        c.extend([lindblad.cav_dim.into(), lindblad.mech_dim.into()]);
    }
    c
}

fn with_eps(drive: &MechanicalDrive, eps: f64) -> Result<MechanicalDrive, Error> {
    MechanicalDrive::from_eps(drive.nu0, drive.n, eps, drive.gamma, drive.n_m)
}

/// First multiple of the drive period after the transient, so that sampled
/// phases match those of `t = 0`.
fn settled_start(p: &Point) -> Result<f64, Error> {
    let rs = rates(&p.drive, &p.cavity, &p.coupling)?;
    rs.check_cooling()?;
    let period = p.drive.period();
    Ok((rs.transient_time() / period).ceil() * period)
}

fn model(p: &Point, lindblad: &LindbladSpec) -> ModelParams {
    ModelParams {
        drive: p.drive,
        cavity: p.cavity,
        coupling: p.coupling,
        cav_dim: lindblad.cav_dim,
        mech_dim: lindblad.mech_dim,
    }
}

/// Time axis `t0 + k T/samples`, `k = 0..=periods·samples`.
fn time_axis(t0: f64, period: f64, time: &TimeSpec) -> Vec<f64> {
    let count = (time.periods * time.samples_per_period as f64).round() as usize;
    let dt = period / time.samples_per_period as f64;
    (0..=count).map(|k| t0 + k as f64 * dt).collect()
}

/// ⟨m⟩(t) from the closed-form trace.
fn analytic_series(p: &Point, times: &[f64]) -> Result<Vec<f64>, Error> {
    let rs = rates(&p.drive, &p.cavity, &p.coupling)?;
    times
        .iter()
        .map(|&t| mean_m(trace_analytic(&rs, p.drive.eps, p.drive.omega, t)?))
        .collect()
}

/// ⟨m⟩(t) from the covariance equation started in the vacuum at `t = 0`.
fn covariance_series(p: &Point, times: &[f64]) -> Result<Vec<f64>, Error> {
    let rs = rates(&p.drive, &p.cavity, &p.coupling)?;
    let dt = times[1] - times[0];
    let t_end = *times.last().expect("non-empty axis");
    let states = covariance_evolve(&rs, &p.drive, &CovarianceState::vacuum(0.0), t_end, dt)?;
    // samples lie on the same grid, offset by whole steps
    let first = states
        .iter()
        .position(|s| s.time >= times[0] - 1e-9 * dt)
        .expect("grid reaches the window");
    states[first..]
        .iter()
        .take(times.len())
        .map(|s| mean_m(s.trace()))
        .collect()
}

struct LindbladSeries {
    m: Vec<f64>,
    n_cav: Vec<f64>,
    trace_err: Vec<f64>,
}

fn lindblad_run(p: &Point, spec: &LindbladSpec, t0: f64, t_end: f64, dt: f64) -> Result<optomech::Trajectory, Error> {
    let params = model(p, spec);
    let rho0 = default_initial_state(&params)?;
    let mut opts = EvolveOptions::new(t_end, dt);
    opts.rtol = spec.rtol;
    opts.atol = spec.rtol * 1e-2;
    opts.record_from = t0;
    opts.transient_end = t0;
    evolve_with(&rho0, &params, &opts)
}

fn lindblad_series(p: &Point, spec: &LindbladSpec, times: &[f64]) -> Result<LindbladSeries, Error> {
    let dt = times[1] - times[0];
    let traj = lindblad_run(p, spec, times[0], *times.last().expect("non-empty axis"), dt)?;
    // the trajectory also holds the initial state at t = 0
    let skip = traj.times.len() - times.len();
    let pick = |name: &str| -> Result<Vec<f64>, Error> { Ok(traj.observable(name)?[skip..].to_vec()) };
    Ok(LindbladSeries {
        m: pick("m_mech")?,
        n_cav: pick("n_cav")?,
        trace_err: pick("trace_err")?,
    })
}

/// Period average of ⟨m⟩ for one engine.
pub fn period_mean(engine: Engine, p: &Point, time: &TimeSpec, lindblad: &LindbladSpec) -> Result<f64, Error> {
    let rs = rates(&p.drive, &p.cavity, &p.coupling)?;
    rs.check_cooling()?;
    let period = p.drive.period();
    match engine {
        Engine::Analytic => m_bar(&rs, p.drive.eps, p.drive.omega),
        Engine::CovarianceOde => {
            let t0 = settled_start(p)?;
            let times = time_axis(t0, period, &TimeSpec { periods: 1.0, ..*time });
            let m = covariance_series(p, &times)?;
            Ok(trapezoid_mean(&times, &m))
        }
        Engine::FullLindblad => {
            let t0 = settled_start(p)?;
            let dt = period / time.samples_per_period as f64;
            let traj = lindblad_run(p, lindblad, t0, t0 + period, dt)?;
            period_average(&traj, "m_mech", period)
        }
    }
}

fn trapezoid_mean(t: &[f64], v: &[f64]) -> f64 {
    let area: f64 = t
        .windows(2)
        .zip(v.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    area / (t[t.len() - 1] - t[0])
}

fn annotate(engine: Engine, location: String) -> impl FnOnce(Error) -> PointError {
    move |source| PointError {
        engine: engine.label(),
        location,
        source,
    }
}

/// Time series of the driven and undriven ⟨m⟩ over `time.periods` drive
/// periods after the transient.
pub fn time_series(scenario: &Scenario, engine: Engine) -> Result<Table, PointError> {
    let location = "base point".to_string();
    let on_err = |e| annotate(engine, location.clone())(e);
    let p = scenario.base_point().map_err(on_err)?;
    let undriven = Point {
        drive: p.drive.undriven(),
        ..p
    };
    let t0 = settled_start(&p).map_err(on_err)?;
    let times = time_axis(t0, p.drive.period(), &scenario.time);

    let mut headers = vec!["t[1/nu0]", "m_driven", "m_undriven"];
    if engine == Engine::FullLindblad {
        headers.extend(["n_cav_driven", "n_cav_undriven", "trace_err"]);
    }
    headers.extend(echo_headers(engine));
    let mut table = Table::new(headers);
    let echo = echo_cells(&p, engine, &scenario.lindblad);

    let mut push = |k: usize, mut row: Vec<Cell>| {
        row.insert(0, times[k].into());
        row.extend(echo.iter().cloned());
        table.push(row);
    };
    match engine {
        Engine::Analytic | Engine::CovarianceOde => {
            let series = if engine == Engine::Analytic {
                analytic_series
            } else {
                covariance_series
            };
            let d = series(&p, &times).map_err(on_err)?;
            let u = series(&undriven, &times).map_err(on_err)?;
            for k in 0..times.len() {
                push(k, vec![d[k].into(), u[k].into()]);
            }
        }
        Engine::FullLindblad => {
            let (d, u) = rayon::join(
                || lindblad_series(&p, &scenario.lindblad, &times),
                || lindblad_series(&undriven, &scenario.lindblad, &times),
            );
            let (d, u) = (d.map_err(on_err)?, u.map_err(on_err)?);
            for k in 0..times.len() {
                let tr = d.trace_err[k].max(u.trace_err[k]);
                push(
                    k,
                    vec![d.m[k].into(), u.m[k].into(), d.n_cav[k].into(), u.n_cav[k].into(), tr.into()],
                );
            }
        }
    }
    Ok(table)
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Point,
    pub plus: f64,
    pub minus: f64,
    pub undriven: f64,
    pub reason: String,
}

fn sweep_row(
    scenario: &Scenario,
    engine: Engine,
    parameter: SweepParameter,
    value: f64,
) -> Result<SweepRow, PointError> {
    let on_err = annotate(engine, format!("{} = {}", parameter.column(), format_number(value)));
    let evaluate = || -> Result<SweepRow, Error> {
        let p = scenario.point_with(scenario.eps, Some((parameter, value)))?;
        let flip = Point {
            drive: with_eps(&p.drive, -p.drive.eps)?,
            ..p
        };
        let flat = Point {
            drive: p.drive.undriven(),
            ..p
        };
        let mean = |q: &Point| period_mean(engine, q, &scenario.time, &scenario.lindblad);
        match mean(&p) {
            Err(Error::Heating { a_minus, a_plus }) => Ok(SweepRow {
                point: p,
                plus: f64::NAN,
                minus: f64::NAN,
                undriven: f64::NAN,
                reason: format!("heating: A-0 = {a_minus:.6e} <= A+0 = {a_plus:.6e}"),
            }),
            Err(e) => Err(e),
            Ok(plus) => Ok(SweepRow {
                point: p,
                plus,
                minus: mean(&flip)?,
                undriven: mean(&flat)?,
                reason: String::new(),
            }),
        }
    };
    evaluate().map_err(on_err)
}

/// Period-averaged ⟨m⟩ for `±ε` and `ε = 0` across the sweep, evaluated in
/// parallel and assembled in sweep order.
pub fn sweep_rows(scenario: &Scenario, engine: Engine) -> Result<Vec<SweepRow>, PointError> {
    let sweep = scenario.sweep.expect("sweep scenario");
    let rows: Vec<Result<SweepRow, PointError>> = sweep
        .values()
        .into_par_iter()
        .map(|v| sweep_row(scenario, engine, sweep.parameter, v))
        .collect();
    // the first failure in sweep order is reported
    rows.into_iter().collect()
}

pub const SWEEP_COLUMNS: [&str; 5] = ["m_bar_plus", "m_bar_minus", "m_bar_undriven", "ratio_plus", "ratio_minus"];

pub fn sweep_table(scenario: &Scenario, engine: Engine) -> Result<Table, PointError> {
    let sweep = scenario.sweep.expect("sweep scenario");
    let rows = sweep_rows(scenario, engine)?;
    let mut headers = vec![sweep.parameter.column()];
    headers.extend(SWEEP_COLUMNS);
    headers.extend(echo_headers(engine).into_iter().filter(|h| *h != sweep.parameter.column()));
    headers.push("reason");
    let mut table = Table::new(headers);
    for (row, v) in rows.iter().zip(sweep.values()) {
        let mut cells: Vec<Cell> = vec![
            v.into(),
            row.plus.into(),
            row.minus.into(),
            row.undriven.into(),
            (row.plus / row.undriven).into(),
            (row.minus / row.undriven).into(),
        ];
        let echo = echo_cells(&row.point, engine, &scenario.lindblad);
        cells.extend(
            echo_headers(engine)
                .into_iter()
                .zip(echo)
                .filter(|(h, _)| *h != sweep.parameter.column())
                .map(|(_, c)| c),
        );
        cells.push(row.reason.clone().into());
        table.push(cells);
    }
    Ok(table)
}

/// Runs one engine for a scenario: a sweep table when a sweep is configured,
/// otherwise a time series.
pub fn run_engine(scenario: &Scenario, engine: Engine) -> Result<Table, PointError> {
    if scenario.sweep.is_some() {
        sweep_table(scenario, engine)
    } else {
        time_series(scenario, engine)
    }
}

/// Rates at a point (re-exported for the verification report).
pub fn point_rates(p: &Point) -> Result<cooling::RateSet, Error> {
    rates(&p.drive, &p.cavity, &p.coupling)
}
