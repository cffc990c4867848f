//! Experiment configuration.
//!
//! Configs are TOML files made of flat sections:
//!
//! ```toml
//! [params]            # all required except r1..r3, which default to 1
//! d1 = 1.0
//! d2 = 1.0
//! xi = 0.02
//! chi = 0.02
//! b1 = 0.5
//! b2 = 0.4
//! b3 = 0.1
//! sigma = 2.0
//!
//! [grid]              # required by `simulate` and `sweep`
//! dim = 1             # 1 or 2, default 1
//! n = 64              # cells along x (and along y unless `ny` is given)
//! length = 1.0        # extent along x (and along y unless `length_y` is given)
//!
//! [initial]
//! kind = "steady_perturbed"   # constant | steady | steady_perturbed | gaussian_bumps | random_smooth
//! amplitude = 0.1
//! mode = 1
//! seed = 0
//!
//! [time]              # required by `simulate` and `sweep`
//! t_end = 60.0
//! dt_max = 0.05
//! cfl_safety = 0.9
//! method = "rk2_ssp"  # or "explicit_euler"
//!
//! [output]
//! dir = "run"
//! cadence = 10        # record every n-th accepted step, plus every snapshot and t_end
//! snapshots = [0.0, 30.0]
//! fit_window = [30.0, 60.0]   # default: second half of the run
//!
//! [run]
//! allow_unverified = false
//!
//! [sweep]             # only read by `sweep`
//! "params.chi" = [0.01, 0.1, 1.0]
//! ```
//!
//! Unknown keys are rejected. `--set section.key=value` overrides are applied
//! to the parsed document before it is checked.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use alarmtaxis_core::{Error as CoreError, Grid, InitialCondition, Method, ModelParams, StepConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Syntax(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("bad override `{spec}`: {reason}")]
    Override { spec: String, reason: String },
    #[error("missing [{0}] section")]
    MissingSection(&'static str),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub d1: f64,
    pub d2: f64,
    pub xi: f64,
    pub chi: f64,
    #[serde(default = "one")]
    pub r1: f64,
    #[serde(default = "one")]
    pub r2: f64,
    #[serde(default = "one")]
    pub r3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub sigma: f64,
}

impl From<ParamsSection> for ModelParams {
    fn from(p: ParamsSection) -> Self {
        ModelParams {
            d1: p.d1,
            d2: p.d2,
            xi: p.xi,
            chi: p.chi,
            r1: p.r1,
            r2: p.r2,
            r3: p.r3,
            b1: p.b1,
            b2: p.b2,
            b3: p.b3,
            sigma: p.sigma,
        }
    }
}

fn default_dim() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_y: Option<f64>,
}

impl GridSection {
    pub fn build(&self) -> Result<Grid, ConfigError> {
        let grid = match self.dim {
            1 => {
                if self.ny.is_some() || self.length_y.is_some() {
                    return Err(invalid("grid.ny", "`ny` and `length_y` need dim = 2"));
                }
                Grid::line(self.n, self.length)
            }
            2 => Grid::rect(
                self.n,
                self.ny.unwrap_or(self.n),
                self.length,
                self.length_y.unwrap_or(self.length),
            ),
            d => return Err(invalid("grid.dim", format!("must be 1 or 2, got {d}"))),
        };
        grid.map_err(|e| invalid("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Spatially constant `value`.
    Constant,
    /// Exactly the coexistence steady state.
    Steady,
    /// Steady state times `1 + amplitude · ψ`, `ψ` a raised cosine of `mode`.
    #[default]
    SteadyPerturbed,
    /// `value` as background plus `count` Gaussian bumps of `width`.
    GaussianBumps,
    /// Random positive cosine series with up to `modes` wavenumbers.
    RandomSmooth,
}

fn default_amplitude() -> f64 {
    0.1
}
fn default_mode() -> u32 {
    1
}
fn default_width() -> f64 {
    0.1
}
fn default_count() -> usize {
    3
}
fn default_modes() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub kind: InitialKind,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_mode")]
    pub mode: u32,
    #[serde(default)]
    pub seed: u64,
    /// Levels for `constant`, background for `gaussian_bumps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<[f64; 3]>,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_modes")]
    pub modes: u32,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: InitialKind::default(),
            amplitude: default_amplitude(),
            mode: default_mode(),
            seed: 0,
            value: None,
            width: default_width(),
            count: default_count(),
            modes: default_modes(),
        }
    }
}

impl InitialSection {
    /// Whether the data is built around the steady state.
    pub fn needs_steady_state(&self) -> bool {
        matches!(self.kind, InitialKind::Steady | InitialKind::SteadyPerturbed)
    }

    pub fn condition(&self) -> Result<InitialCondition, ConfigError> {
        let value = || {
            self.value
                .ok_or_else(|| invalid("initial.value", "required for this kind"))
        };
        Ok(match self.kind {
            InitialKind::Constant => InitialCondition::Constant(value()?),
            InitialKind::Steady => InitialCondition::SteadyPerturbed {
                amplitude: 0.0,
                mode: 0,
            },
            InitialKind::SteadyPerturbed => InitialCondition::SteadyPerturbed {
                amplitude: self.amplitude,
                mode: self.mode,
            },
            InitialKind::GaussianBumps => InitialCondition::GaussianBumps {
                background: value()?,
                amplitude: self.amplitude,
                width: self.width,
                count: self.count,
                seed: self.seed,
            },
            InitialKind::RandomSmooth => InitialCondition::RandomSmooth {
                modes: self.modes,
                seed: self.seed,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    ExplicitEuler,
    #[default]
    Rk2Ssp,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::ExplicitEuler => Method::ExplicitEuler,
            MethodName::Rk2Ssp => Method::Rk2Ssp,
        }
    }
}

fn default_dt_max() -> f64 {
    0.05
}
fn default_cfl() -> f64 {
    0.9
}
fn default_max_steps() -> usize {
    100_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub method: MethodName,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("run")
}
fn default_cadence() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            cadence: default_cadence(),
            snapshots: Vec::new(),
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub allow_unverified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub run: RunSection,
    /// Dotted keys mapped to the values to sweep over.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<Value>>,
}

fn line_of(text: &str, err: &toml::de::Error) -> Option<usize> {
    err.span()
        .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
}

fn from_text(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| match line_of(text, &e) {
        Some(line) => ConfigError::Parse {
            line,
            message: e.message().to_owned(),
        },
        None => ConfigError::Syntax(e.message().to_owned()),
    })
}

/// Parses a single `--set` value: any TOML value, or a bare word as a string.
fn parse_value(raw: &str) -> Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_owned())),
        Err(_) => Value::String(raw.to_owned()),
    }
}

/// Sets `key` (dotted, e.g. `params.chi`) in `doc`, creating tables as needed.
pub fn set_dotted(doc: &mut Table, key: &str, value: Value) -> Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err("empty key segment".into());
    }
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut table = doc;
    for part in path {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = match entry {
            Value::Table(t) => t,
            _ => return Err(format!("`{part}` is not a section")),
        };
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Splits `key=value`.
pub fn parse_override(spec: &str) -> Result<(String, Value), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override {
        spec: spec.to_owned(),
        reason: "expected key=value".into(),
    })?;
    Ok((key.trim().to_owned(), parse_value(raw.trim())))
}

impl ExperimentConfig {
    /// Parses and validates a config, applying `overrides` first.
    pub fn parse(text: &str, overrides: &[(String, Value)]) -> Result<Self, ConfigError> {
        // Parsing the untouched text first reports file errors with their line.
        let mut config = from_text(text)?;
        if !overrides.is_empty() {
            let mut doc: Table = text
                .parse()
                .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
            for (key, value) in overrides {
                set_dotted(&mut doc, key, value.clone()).map_err(|reason| ConfigError::Override {
                    spec: key.clone(),
                    reason,
                })?;
            }
            config = doc.try_into().map_err(|e: toml::de::Error| ConfigError::Override {
                spec: overrides.iter().map(|o| o.0.as_str()).collect::<Vec<_>>().join(", "),
                reason: e.message().to_owned(),
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[(String, Value)]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn model_params(&self) -> ModelParams {
        self.params.into()
    }

    pub fn grid_section(&self) -> Result<&GridSection, ConfigError> {
        self.grid.as_ref().ok_or(ConfigError::MissingSection("grid"))
    }

    pub fn time_section(&self) -> Result<&TimeSection, ConfigError> {
        self.time.as_ref().ok_or(ConfigError::MissingSection("time"))
    }

    pub fn build_grid(&self) -> Result<Grid, ConfigError> {
        self.grid_section()?.build()
    }

    pub fn step_config(&self) -> Result<StepConfig, ConfigError> {
        let time = self.time_section()?;
        let mut cfg = StepConfig::new(time.t_end);
        cfg.dt_max = time.dt_max;
        cfg.cfl_safety = time.cfl_safety;
        cfg.method = time.method.into();
        cfg.max_steps = time.max_steps;
        cfg.observe_every = self.output.cadence;
        cfg.checkpoints = self.output.snapshots.clone();
        Ok(cfg)
    }

    /// Field-level checks that do not need a grid or a run. Sections only
    /// some subcommands need are checked when present.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_params()
            .validate(self.run.allow_unverified)
            .map_err(|e| core_invalid("params", e))?;
        if let Some(grid) = &self.grid {
            grid.build()?;
        }
        if self.time.is_some() {
            if self.output.cadence == 0 {
                return Err(invalid("output.cadence", "must be at least 1"));
            }
            self.step_config()?.validate().map_err(|e| match e {
                CoreError::InvalidParameter { name, value, reason } => {
                    let section = if name == "checkpoints" {
                        "output.snapshots"
                    } else {
                        name
                    };
                    let field = if section.contains('.') {
                        section.to_owned()
                    } else {
                        format!("time.{section}")
                    };
                    invalid(field, format!("{reason} (got {value})"))
                }
                other => invalid("time", other.to_string()),
            })?;
        }
        if let Some([a, b]) = self.output.fit_window {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(invalid("output.fit_window", "needs two finite times with start < end"));
            }
        }
        let init = &self.initial;
        if matches!(init.kind, InitialKind::Constant | InitialKind::GaussianBumps) {
            let value = init
                .value
                .ok_or_else(|| invalid("initial.value", "required for this kind"))?;
            if value.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(invalid("initial.value", "levels must be finite and non-negative"));
            }
        }
        if init.kind == InitialKind::SteadyPerturbed && !(init.amplitude > -1.0 && init.amplitude.is_finite()) {
            return Err(invalid("initial.amplitude", "relative amplitude must exceed -1"));
        }
        if init.kind == InitialKind::GaussianBumps && !(init.width > 0.0 && init.amplitude >= 0.0) {
            return Err(invalid(
                "initial.width",
                "bumps need positive width and non-negative amplitude",
            ));
        }
        for (key, values) in &self.sweep {
            if values.is_empty() {
                return Err(invalid(format!("sweep.{key}"), "needs at least one value"));
            }
            if key.starts_with("sweep") {
                return Err(invalid(format!("sweep.{key}"), "cannot sweep the sweep table"));
            }
        }
        Ok(())
    }
}

fn core_invalid(section: &str, e: CoreError) -> ConfigError {
    match e {
        CoreError::InvalidParameter { name, value, reason } => {
            invalid(format!("{section}.{name}"), format!("{reason} (got {value})"))
        }
        other => invalid(section, other.to_string()),
    }
}
