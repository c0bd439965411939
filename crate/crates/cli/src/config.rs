//! Scenario files.
//!
//! A scenario is a small TOML document; every frequency and rate is given in
//! units of ν0 (so `ν0 = 1` internally).
//!
//! ```toml
//! schema_version = 1
//! name = "fig2"
//! engines = ["analytic"]          # analytic | covariance_ode | full_lindblad
//!
//! [drive]
//! n = 2
//! eps = 0.0555555555556           # or eps_prime
//! gamma = 0.0
//! n_m = 0.0
//!
//! [cavity]
//! delta = -0.9469
//! kappa = 0.25
//! n_p = 0.0
//!
//! [coupling]
//! g_eff = 0.5                     # or pump + chi0
//!
//! [sweep]                         # optional
//! parameter = "delta"
//! min = -1.2
//! max = -0.8
//! count = 81
//! ```
//!
//! Optional tables: `[time]` (`periods`, `samples_per_period`),
//! `[lindblad]` (`cav_dim`, `mech_dim`, `rtol`) and `[output]` (`dir`, `svg`).

use std::path::{Path, PathBuf};

use optomech::model::{CavityConfig, EffectiveCoupling};
use optomech::MechanicalDrive;
use serde::Deserialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    CovarianceOde,
    FullLindblad,
}

impl Engine {
    pub fn label(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::CovarianceOde => "covariance_ode",
            Engine::FullLindblad => "full_lindblad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Delta,
    Eps,
    Kappa,
    GEff,
    Gamma,
    NM,
    NP,
}

impl SweepParameter {
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::Delta => "delta[nu0]",
            SweepParameter::Eps => "eps",
            SweepParameter::Kappa => "kappa[nu0]",
            SweepParameter::GEff => "g_eff[nu0]",
            SweepParameter::Gamma => "gamma[nu0]",
            SweepParameter::NM => "n_m",
            SweepParameter::NP => "n_p",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    name: String,
    engines: Vec<Engine>,
    drive: RawDrive,
    cavity: RawCavity,
    coupling: RawCoupling,
    sweep: Option<RawSweep>,
    #[serde(default)]
    time: TimeSpec,
    #[serde(default)]
    lindblad: LindbladSpec,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    n: u32,
    eps: Option<f64>,
    eps_prime: Option<f64>,
    #[serde(default)]
    gamma: f64,
    #[serde(default)]
    n_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    delta: f64,
    kappa: f64,
    #[serde(default)]
    n_p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    g_eff: Option<f64>,
    pump: Option<f64>,
    chi0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: SweepParameter,
    min: f64,
    max: f64,
    count: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    svg: Option<bool>,
}

/// Time-series resolution.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub periods: f64,
    pub samples_per_period: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            periods: 2.0,
            samples_per_period: 64,
        }
    }
}

/// Settings of the full master-equation engine.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LindbladSpec {
    pub cav_dim: usize,
    pub mech_dim: usize,
    pub rtol: f64,
}

impl Default for LindbladSpec {
    fn default() -> Self {
        Self {
            cav_dim: 12,
            mech_dim: 12,
            rtol: 1e-8,
        }
    }
}

/// How the linearised coupling is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSpec {
    GEff { g_eff: f64 },
    Pump { pump: f64, chi0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.max } else { self.min + k as f64 * step })
            .collect()
    }
}

/// Model parameters at one point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub drive: MechanicalDrive,
    pub cavity: CavityConfig,
    pub coupling: EffectiveCoupling,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub engines: Vec<Engine>,
    pub n: u32,
    pub eps: f64,
    pub gamma: f64,
    pub n_m: f64,
    pub delta: f64,
    pub kappa: f64,
    pub n_p: f64,
    pub coupling: CouplingSpec,
    pub sweep: Option<Sweep>,
    pub time: TimeSpec,
    pub lindblad: LindbladSpec,
    pub output_dir: Option<PathBuf>,
    pub svg: bool,
}

fn finite(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, "must be a finite number"))
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", raw.schema_version),
            ));
        }
        if raw.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if raw.name.contains(['/', '\\']) {
            return Err(invalid("name", "must not contain path separators"));
        }
        if raw.engines.is_empty() {
            return Err(invalid("engines", "at least one engine is required"));
        }
        let mut engines = raw.engines.clone();
        engines.dedup();

        let d = &raw.drive;
        if d.n == 0 {
            return Err(invalid("drive.n", "must be a positive integer"));
        }
        // ν0 = 1 and ω = 1/n, so ε = 2 ε′ n²
        let eps = match (d.eps, d.eps_prime) {
            (Some(e), None) => finite("drive.eps", e)?,
            (None, Some(ep)) => 2.0 * finite("drive.eps_prime", ep)? * (d.n * d.n) as f64,
            (None, None) => return Err(invalid("drive.eps", "give either eps or eps_prime")),
            (Some(_), Some(_)) => return Err(invalid("drive.eps_prime", "give either eps or eps_prime, not both")),
        };
        if !(finite("drive.gamma", d.gamma)? >= 0.0) {
            return Err(invalid("drive.gamma", "must be non-negative"));
        }
        if !(finite("drive.n_m", d.n_m)? >= 0.0) {
            return Err(invalid("drive.n_m", "must be non-negative"));
        }
        let c = &raw.cavity;
        finite("cavity.delta", c.delta)?;
        if !(finite("cavity.kappa", c.kappa)? > 0.0) {
            return Err(invalid("cavity.kappa", "must be positive"));
        }
        if !(finite("cavity.n_p", c.n_p)? >= 0.0) {
            return Err(invalid("cavity.n_p", "must be non-negative"));
        }
        let cp = &raw.coupling;
        let coupling = match (cp.g_eff, cp.pump, cp.chi0) {
            (Some(g), None, None) => {
                if !(finite("coupling.g_eff", g)? >= 0.0) {
                    return Err(invalid("coupling.g_eff", "must be non-negative"));
                }
                CouplingSpec::GEff { g_eff: g }
            }
            (None, Some(p), Some(x)) => {
                finite("coupling.pump", p)?;
                if !(finite("coupling.chi0", x)? > 0.0) {
                    return Err(invalid("coupling.chi0", "must be positive"));
                }
                CouplingSpec::Pump { pump: p, chi0: x }
            }
            _ => return Err(invalid("coupling", "give either g_eff or both pump and chi0")),
        };
        let sweep = match &raw.sweep {
            None => None,
            Some(s) => {
                finite("sweep.min", s.min)?;
                finite("sweep.max", s.max)?;
                if s.count < 2 {
                    return Err(invalid("sweep.count", "must be at least 2"));
                }
                if s.max <= s.min {
                    return Err(invalid("sweep.max", "must exceed sweep.min"));
                }
                Some(Sweep {
                    parameter: s.parameter,
                    min: s.min,
                    max: s.max,
                    count: s.count,
                })
            }
        };
        if !(raw.time.periods > 0.0 && raw.time.periods.is_finite()) {
            return Err(invalid("time.periods", "must be positive"));
        }
        if raw.time.samples_per_period < 4 {
            return Err(invalid("time.samples_per_period", "must be at least 4"));
        }
        if raw.lindblad.cav_dim < 4 || raw.lindblad.mech_dim < 4 {
            return Err(invalid("lindblad.cav_dim", "Fock cutoffs must be at least 4"));
        }
        if !(raw.lindblad.rtol > 0.0 && raw.lindblad.rtol < 1e-2) {
            return Err(invalid("lindblad.rtol", "must lie in (0, 1e-2)"));
        }
        let scenario = Scenario {
            name: raw.name.clone(),
            engines,
            n: d.n,
            eps,
            gamma: d.gamma,
            n_m: d.n_m,
            delta: c.delta,
            kappa: c.kappa,
            n_p: c.n_p,
            coupling,
            sweep,
            time: raw.time,
            lindblad: raw.lindblad,
            output_dir: raw.output.dir.clone(),
            svg: raw.output.svg.unwrap_or(true),
        };
        // the base point must build (drive strength, cooling side etc. are
        // checked per point later)
        scenario.base_point().map_err(|e| invalid("drive", e.to_string()))?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Builds the model parameters with `eps` overriding the scenario's
    /// strength and an optional swept parameter substituted.
    pub fn point_with(&self, eps: f64, swept: Option<(SweepParameter, f64)>) -> optomech::Result<Point> {
        let mut s = self.clone();
        let mut eps = eps;
        if let Some((p, v)) = swept {
            match p {
                SweepParameter::Delta => s.delta = v,
                SweepParameter::Eps => eps = v,
                SweepParameter::Kappa => s.kappa = v,
                SweepParameter::GEff => s.coupling = CouplingSpec::GEff { g_eff: v },
                SweepParameter::Gamma => s.gamma = v,
                SweepParameter::NM => s.n_m = v,
                SweepParameter::NP => s.n_p = v,
            }
        }
        let drive = MechanicalDrive::from_eps(1.0, s.n, eps, s.gamma, s.n_m)?;
        let (pump, chi0) = match s.coupling {
            CouplingSpec::Pump { pump, chi0 } => (pump, chi0),
            // pump consistent with the requested g_eff at χ0 = 1
            CouplingSpec::GEff { g_eff } => (g_eff * (4.0 * s.delta * s.delta + s.kappa * s.kappa).sqrt(), 1.0),
        };
        let cavity = CavityConfig {
            delta: s.delta,
            kappa: s.kappa,
            n_p: s.n_p,
            pump,
            chi0,
        };
        cavity.validate()?;
        let coupling = match s.coupling {
            CouplingSpec::GEff { g_eff } => EffectiveCoupling::from_g_eff(g_eff, &cavity)?,
            CouplingSpec::Pump { .. } => EffectiveCoupling::from_cavity(&cavity),
        };
        Ok(Point { drive, cavity, coupling })
    }

    pub fn base_point(&self) -> optomech::Result<Point> {
        self.point_with(self.eps, None)
    }
}
