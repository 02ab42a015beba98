//! TOML run configuration.
//!
//! ```toml
//! [physical]
//! eps = 0.2          # required; everything else has a default
//! k1 = 1.0
//! k2 = 2.0
//! a = 1.0
//! b = 1.0
//! omega_u = 10.0
//! omega_v = 10.0
//! closure = "consistent"   # or "printed"
//!
//! [flux]
//! expr = "u*v"       # also the aliases "bilinear", "quadratic", "zero"
//!
//! [profiles]
//! u0 = { kind = "sech2", amplitude = 1.0, scale = 1.0, shift = 0.0 }
//! phi = { kind = "zero" }
//!
//! [grid]
//! n = 512            # x points; default: power of two with dx <= eps/8
//! m = 1024           # zeta points; default: sized from the x box
//! length = 8.0       # x box; default: from the profile support and t_end
//! margin = 0.5
//!
//! [time]
//! t_end = 0.5
//! dt_full = 0.001
//! dt_kdv = 0.01
//! output_times = [0.25, 0.5]
//! defect_spacing = 0.002
//! fast_samples_per_period = 16
//!
//! [run]
//! mode = "compare"   # solve-full | solve-kdv | assemble | compare | sweep | diagnose-fast-mode
//! eps_list = [0.4, 0.2, 0.1]
//! consistent = true
//! out_dir = "out"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_flux, resolve_alias, ExprError};
use crate::params::{Closure, ModelError, PhysicalParams, DEFAULT_OMEGA};
use crate::pipeline::{GridSpec, Problem};
use crate::profiles::Profile;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("invalid flux at `{key}`: {source}")]
    Flux {
        key: String,
        #[source]
        source: ExprError,
    },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Key path of the offending entry, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { key, .. } | ConfigError::Flux { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SolveFull,
    SolveKdv,
    Assemble,
    Compare,
    Sweep,
    DiagnoseFastMode,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::SolveFull,
        Mode::SolveKdv,
        Mode::Assemble,
        Mode::Compare,
        Mode::Sweep,
        Mode::DiagnoseFastMode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SolveFull => "solve-full",
            Mode::SolveKdv => "solve-kdv",
            Mode::Assemble => "assemble",
            Mode::Compare => "compare",
            Mode::Sweep => "sweep",
            Mode::DiagnoseFastMode => "diagnose-fast-mode",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

fn default_k1() -> f64 {
    1.0
}
fn default_k2() -> f64 {
    2.0
}
fn default_one() -> f64 {
    1.0
}
fn default_omega() -> f64 {
    DEFAULT_OMEGA
}
fn default_flux() -> String {
    "u*v".to_string()
}
fn default_t_end() -> f64 {
    0.5
}
fn default_margin() -> f64 {
    GridSpec::default().margin
}
fn default_eps_list() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}
fn default_true() -> bool {
    true
}
fn default_samples() -> f64 {
    16.0
}
fn default_mode() -> Mode {
    Mode::Compare
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    eps: f64,
    #[serde(default = "default_k1")]
    k1: f64,
    #[serde(default = "default_k2")]
    k2: f64,
    #[serde(default = "default_one")]
    a: f64,
    #[serde(default = "default_one")]
    b: f64,
    #[serde(default = "default_omega")]
    omega_u: f64,
    #[serde(default = "default_omega")]
    omega_v: f64,
    #[serde(default)]
    closure: Closure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlux {
    #[serde(default = "default_flux")]
    expr: String,
}

impl Default for RawFlux {
    fn default() -> Self {
        Self { expr: default_flux() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfiles {
    #[serde(default)]
    u0: Profile,
    #[serde(default = "zero_profile")]
    phi: Profile,
}

fn zero_profile() -> Profile {
    Profile::Zero
}

impl Default for RawProfiles {
    fn default() -> Self {
        Self {
            u0: Profile::sech2(),
            phi: Profile::Zero,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    m: Option<usize>,
    length: Option<f64>,
    #[serde(default = "default_margin")]
    margin: f64,
}

impl Default for RawGrid {
    fn default() -> Self {
        Self {
            n: None,
            m: None,
            length: None,
            margin: default_margin(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    #[serde(default = "default_t_end")]
    t_end: f64,
    dt_full: Option<f64>,
    dt_kdv: Option<f64>,
    #[serde(default)]
    output_times: Vec<f64>,
    defect_spacing: Option<f64>,
    #[serde(default = "default_samples")]
    fast_samples_per_period: f64,
}

impl Default for RawTime {
    fn default() -> Self {
        Self {
            t_end: default_t_end(),
            dt_full: None,
            dt_kdv: None,
            output_times: Vec::new(),
            defect_spacing: None,
            fast_samples_per_period: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(default = "default_mode")]
    mode: Mode,
    #[serde(default = "default_eps_list")]
    eps_list: Vec<f64>,
    #[serde(default = "default_true")]
    consistent: bool,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            eps_list: default_eps_list(),
            consistent: true,
            out_dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    physical: RawPhysical,
    #[serde(default)]
    flux: RawFlux,
    #[serde(default)]
    profiles: RawProfiles,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    run: RawRun,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    pub mode: Mode,
    pub eps_list: Vec<f64>,
    pub fast_samples_per_period: f64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Replaces `eps`, revalidating the parameters.
    pub fn with_eps(mut self, eps: f64) -> Result<Self, ConfigError> {
        self.problem.params = self
            .problem
            .params
            .with_eps(eps)
            .map_err(|e| model_error(e, "physical"))?;
        Ok(self)
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_column(text, s.start))
                .unwrap_or((1, 1));
            ConfigError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        raw.validate()
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse()
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn model_error(e: ModelError, section: &str) -> ConfigError {
    match e {
        ModelError::InvalidParams { name, value } => ConfigError::invalid(
            &format!("{section}.{name}"),
            format!("{value} must be finite and > 0"),
        ),
        other => ConfigError::invalid(section, other.to_string()),
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("{v} must be finite and > 0")))
    }
}

impl RawConfig {
    fn validate(self) -> Result<RunConfig, ConfigError> {
        let ph = &self.physical;
        let params = PhysicalParams::new(ph.eps, ph.k1, ph.k2, ph.a, ph.b)
            .and_then(|p| p.with_bounds(ph.omega_u, ph.omega_v))
            .map_err(|e| model_error(e, "physical"))?;

        let flux = parse_flux(resolve_alias(&self.flux.expr)).map_err(|source| ConfigError::Flux {
            key: "flux.expr".to_string(),
            source,
        })?;

        self.profiles
            .u0
            .validate()
            .map_err(|m| ConfigError::invalid("profiles.u0", m))?;
        self.profiles
            .phi
            .validate()
            .map_err(|m| ConfigError::invalid("profiles.phi", m))?;

        let g = &self.grid;
        if let Some(n) = g.n {
            if n < 4 || n % 2 != 0 {
                return Err(ConfigError::invalid("grid.n", format!("{n} must be even and >= 4")));
            }
        }
        if let Some(m) = g.m {
            if m < 4 || !m.is_power_of_two() {
                return Err(ConfigError::invalid("grid.m", format!("{m} must be a power of two >= 4")));
            }
        }
        if let Some(length) = g.length {
            positive("grid.length", length)?;
        }
        if !(g.margin.is_finite() && g.margin >= 0.0) {
            return Err(ConfigError::invalid("grid.margin", format!("{} must be >= 0", g.margin)));
        }

        let t = &self.time;
        if !(t.t_end.is_finite() && t.t_end >= 0.0) {
            return Err(ConfigError::invalid("time.t_end", format!("{} must be finite and >= 0", t.t_end)));
        }
        if let Some(dt) = t.dt_full {
            positive("time.dt_full", dt)?;
        }
        if let Some(dt) = t.dt_kdv {
            positive("time.dt_kdv", dt)?;
        }
        if let Some(d) = t.defect_spacing {
            if !(d.is_finite() && d >= 0.0) {
                return Err(ConfigError::invalid("time.defect_spacing", format!("{d} must be >= 0")));
            }
        }
        for (i, &o) in t.output_times.iter().enumerate() {
            if !(o.is_finite() && o >= 0.0 && o <= t.t_end) {
                return Err(ConfigError::invalid(
                    &format!("time.output_times[{i}]"),
                    format!("{o} is outside [0, {}]", t.t_end),
                ));
            }
        }
        if !(t.fast_samples_per_period.is_finite() && t.fast_samples_per_period >= 8.0) {
            return Err(ConfigError::invalid(
                "time.fast_samples_per_period",
                format!("{} must be >= 8", t.fast_samples_per_period),
            ));
        }

        let r = &self.run;
        if r.mode == Mode::Sweep {
            crate::validation::check_eps_list(&r.eps_list).map_err(|e| {
                ConfigError::invalid("run.eps_list", e.to_string())
            })?;
        }
        for (i, &e) in r.eps_list.iter().enumerate() {
            positive(&format!("run.eps_list[{i}]"), e)?;
        }

        Ok(RunConfig {
            problem: Problem {
                params,
                closure: ph.closure,
                flux,
                u0: self.profiles.u0,
                phi: self.profiles.phi,
                grid: GridSpec {
                    n: g.n,
                    m: g.m,
                    length: g.length,
                    margin: g.margin,
                },
                t_end: t.t_end,
                dt_full: t.dt_full,
                dt_kdv: t.dt_kdv,
                output_times: t.output_times.clone(),
                consistent: r.consistent,
                defect_spacing: t.defect_spacing,
            },
            mode: r.mode,
            eps_list: r.eps_list.clone(),
            fast_samples_per_period: t.fast_samples_per_period,
            out_dir: r.out_dir.clone(),
        })
    }
}
