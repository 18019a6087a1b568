//! Flat `key=value` experiment configuration.
//!
//! One pair per line, `#` starts a comment. A `preset` line expands a named
//! setup from [`crate::presets`] first; every other key then overrides it,
//! whatever its position in the file.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::fsav::PairField;
use crate::grid::{GridSpec, RealField};
use crate::presets::{preset, preset_names, Preset};
use crate::sav::ModelParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    TypeError {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("{}: `{key}` {message}", LineLabel(*line))]
    ConstraintViolation {
        line: Option<usize>,
        key: String,
        message: String,
    },
}

struct LineLabel(Option<usize>);

impl fmt::Display for LineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(l) => write!(f, "line {l}"),
            None => f.write_str("config"),
        }
    }
}

impl ConfigError {
    /// Key named by the error.
    pub fn key(&self) -> &str {
        match self {
            Self::UnknownKey { key, .. }
            | Self::TypeError { key, .. }
            | Self::ConstraintViolation { key, .. } => key,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            Self::UnknownKey { line, .. } | Self::TypeError { line, .. } => Some(*line),
            Self::ConstraintViolation { line, .. } => *line,
        }
    }

    pub(crate) fn violation(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        Self::ConstraintViolation {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `|x|²/2`.
    Harmonic,
    /// `10 Σ sin²(π x_i)`.
    OpticalLattice,
}

impl PotentialSpec {
    pub fn sample(&self, grid: &GridSpec) -> RealField {
        match self {
            Self::Zero => RealField::zeros(grid.len()),
            Self::Harmonic => grid.sample(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>()),
            Self::OpticalLattice => grid.sample(|x| {
                10.0 * x.iter().map(|v| (PI * v).sin().powi(2)).sum::<f64>()
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialSpec {
    /// `exp(-x²) exp(-ix)`, 1D only.
    ChirpedGaussian,
    /// `(2/√π) exp(-|x|²)`.
    Gaussian,
    Constant { re: f64, im: f64 },
}

impl InitialSpec {
    pub fn sample(&self, grid: &GridSpec) -> PairField {
        match *self {
            Self::ChirpedGaussian => PairField {
                p: grid.sample(|x| (-x[0] * x[0]).exp() * x[0].cos()),
                q: grid.sample(|x| -(-x[0] * x[0]).exp() * x[0].sin()),
            },
            Self::Gaussian => PairField {
                p: grid.sample(|x| 2.0 / PI.sqrt() * (-x.iter().map(|v| v * v).sum::<f64>()).exp()),
                q: RealField::zeros(grid.len()),
            },
            Self::Constant { re, im } => PairField {
                p: RealField::constant(grid.len(), re),
                q: RealField::constant(grid.len(), im),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Fsav,
    Cnf,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Fsav => "fsav",
            Self::Cnf => "cnf",
        }
    }
}

/// Thresholds applied by `--check`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckThresholds {
    /// Largest admissible relative energy drift of a run.
    pub max_rh: f64,
    /// Expected temporal order and its tolerance.
    pub order: f64,
    pub order_tol: f64,
    /// Minimum error drop, in decades, per doubling of `N`.
    pub min_decades: f64,
    /// Spatial pairs whose coarse error is at or below this are not checked.
    pub error_floor: f64,
}

impl Default for CheckThresholds {
    fn default() -> Self {
        Self {
            max_rh: 1e-9,
            order: 2.0,
            order_tol: 0.1,
            min_decades: 1.0,
            error_floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub dim: usize,
    pub domain: (f64, f64),
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub potential: PotentialSpec,
    pub initial: InitialSpec,
    pub c0: f64,
    pub tau: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub stride: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub tau_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub snapshot_times: Vec<f64>,
    pub raw_fields: bool,
    pub checks: CheckThresholds,
}

impl ExperimentConfig {
    /// Grid of the configured domain with `n` points per axis.
    pub fn grid_with(&self, n: usize) -> crate::Result<GridSpec> {
        let (l, r) = self.domain;
        match self.dim {
            1 => GridSpec::one_d(l, r, n),
            _ => GridSpec::two_d(l, r, n),
        }
    }

    pub fn grid(&self) -> crate::Result<GridSpec> {
        self.grid_with(self.n)
    }

    pub fn params(&self, grid: &GridSpec) -> crate::Result<ModelParams> {
        ModelParams::new(
            grid,
            self.alpha,
            self.gamma,
            self.beta,
            self.potential.sample(grid),
            self.c0,
        )
    }

    pub fn initial_fields(&self, grid: &GridSpec) -> PairField {
        self.initial.sample(grid)
    }

    /// Step index of a snapshot time.
    pub fn snapshot_step(&self, t: f64) -> usize {
        (t / self.tau).round() as usize
    }
}

pub const KEYS: &[&str] = &[
    "preset",
    "dim",
    "domain",
    "n",
    "alpha",
    "gamma",
    "beta",
    "potential",
    "initial",
    "c0",
    "tau",
    "t_end",
    "scheme",
    "stride",
    "output_dir",
    "seed",
    "tau_list",
    "n_list",
    "snapshot_times",
    "raw_fields",
    "check_max_rh",
    "check_order",
    "check_order_tol",
    "check_min_decades",
    "check_error_floor",
];

#[derive(Debug, Clone)]
struct Slot<T> {
    value: T,
    line: Option<usize>,
}

fn slot<T>(value: T) -> Option<Slot<T>> {
    Some(Slot { value, line: None })
}

#[derive(Default)]
struct Builder {
    preset: Option<String>,
    dim: Option<Slot<usize>>,
    domain: Option<Slot<(f64, f64)>>,
    n: Option<Slot<usize>>,
    alpha: Option<Slot<f64>>,
    gamma: Option<Slot<f64>>,
    beta: Option<Slot<f64>>,
    potential: Option<Slot<PotentialSpec>>,
    initial: Option<Slot<InitialSpec>>,
    c0: Option<Slot<f64>>,
    tau: Option<Slot<f64>>,
    t_end: Option<Slot<f64>>,
    scheme: Option<Slot<Scheme>>,
    stride: Option<Slot<usize>>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    tau_list: Option<Slot<Vec<f64>>>,
    n_list: Option<Slot<Vec<usize>>>,
    snapshot_times: Option<Slot<Vec<f64>>>,
    raw_fields: Option<bool>,
    checks: CheckThresholds,
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn type_error(&self, expected: &'static str) -> ConfigError {
        ConfigError::TypeError {
            line: self.line,
            key: self.key.to_string(),
            expected,
            value: self.value.to_string(),
        }
    }

    fn violation(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::violation(Some(self.line), self.key, message)
    }

    fn slot<T>(&self, value: T) -> Option<Slot<T>> {
        Some(Slot {
            value,
            line: Some(self.line),
        })
    }

    fn real(&self) -> Result<f64, ConfigError> {
        parse_real(self.value).ok_or_else(|| self.type_error("a finite real number"))
    }

    fn integer(&self) -> Result<usize, ConfigError> {
        self.value
            .parse()
            .map_err(|_| self.type_error("a nonnegative integer"))
    }

    fn reals(&self) -> Result<Vec<f64>, ConfigError> {
        split_list(self.value)
            .map(|s| parse_real(s).ok_or_else(|| self.type_error("a comma-separated list of reals")))
            .collect()
    }

    fn integers(&self) -> Result<Vec<usize>, ConfigError> {
        split_list(self.value)
            .map(|s| {
                s.parse()
                    .map_err(|_| self.type_error("a comma-separated list of integers"))
            })
            .collect()
    }

    fn boolean(&self) -> Result<bool, ConfigError> {
        match self.value {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.type_error("true or false")),
        }
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.real()?;
        if v <= 0.0 {
            return Err(self.violation(format!("must be positive, got {v}")));
        }
        Ok(v)
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

fn valid_n(n: usize) -> bool {
    n >= 4 && n % 2 == 0
}

impl Builder {
    fn apply_preset(&mut self, p: &Preset) {
        self.preset = Some(p.name.to_string());
        self.dim = slot(p.dim);
        self.domain = slot(p.domain);
        self.n = slot(p.n);
        self.gamma = slot(p.gamma);
        self.beta = slot(p.beta);
        self.potential = slot(p.potential);
        self.initial = slot(p.initial);
        self.c0 = slot(p.c0);
        self.tau = slot(p.tau);
        self.t_end = slot(p.t_end);
        self.stride = slot(p.stride);
        self.tau_list = slot(p.tau_list.to_vec());
        self.n_list = slot(p.n_list.to_vec());
        self.snapshot_times = slot(p.snapshot_times.to_vec());
    }

    fn set(&mut self, e: &Entry) -> Result<(), ConfigError> {
        match e.key {
            "dim" => {
                let d = e.integer()?;
                if d != 1 && d != 2 {
                    return Err(e.violation(format!("must be 1 or 2, got {d}")));
                }
                self.dim = e.slot(d);
            }
            "domain" => {
                let v = e.reals()?;
                if v.len() != 2 {
                    return Err(e.type_error("two reals `x_left,x_right`"));
                }
                if v[1] <= v[0] {
                    return Err(e.violation(format!("needs x_right > x_left, got {},{}", v[0], v[1])));
                }
                self.domain = e.slot((v[0], v[1]));
            }
            "n" => {
                let n = e.integer()?;
                if !valid_n(n) {
                    return Err(e.violation(format!("must be even and at least 4, got {n}")));
                }
                self.n = e.slot(n);
            }
            "alpha" => {
                let a = e.real()?;
                if !(a > 1.0 && a <= 2.0) {
                    return Err(e.violation(format!("must lie in (1, 2], got {a}")));
                }
                self.alpha = e.slot(a);
            }
            "gamma" => self.gamma = e.slot(e.positive()?),
            "beta" => self.beta = e.slot(e.real()?),
            "potential" => {
                let p = match e.value {
                    "zero" => PotentialSpec::Zero,
                    "harmonic" => PotentialSpec::Harmonic,
                    "optical_lattice" => PotentialSpec::OpticalLattice,
                    _ => return Err(e.type_error("zero, harmonic or optical_lattice")),
                };
                self.potential = e.slot(p);
            }
            "initial" => {
                let spec = match e.value {
                    "chirped_gaussian" => InitialSpec::ChirpedGaussian,
                    "gaussian" => InitialSpec::Gaussian,
                    other => {
                        let expected = "chirped_gaussian, gaussian or constant:re[,im]";
                        let rest = other.strip_prefix("constant:").ok_or_else(|| e.type_error(expected))?;
                        let v: Vec<f64> = split_list(rest)
                            .map(|s| parse_real(s).ok_or_else(|| e.type_error(expected)))
                            .collect::<Result<_, _>>()?;
                        match v[..] {
                            [re] => InitialSpec::Constant { re, im: 0.0 },
                            [re, im] => InitialSpec::Constant { re, im },
                            _ => return Err(e.type_error(expected)),
                        }
                    }
                };
                self.initial = e.slot(spec);
            }
            "c0" => {
                let c = e.real()?;
                if c < 0.0 {
                    return Err(e.violation(format!("must be nonnegative, got {c}")));
                }
                self.c0 = e.slot(c);
            }
            "tau" => self.tau = e.slot(e.positive()?),
            "t_end" => self.t_end = e.slot(e.positive()?),
            "scheme" => {
                let s = match e.value {
                    "fsav" => Scheme::Fsav,
                    "cnf" => Scheme::Cnf,
                    _ => return Err(e.type_error("fsav or cnf")),
                };
                self.scheme = e.slot(s);
            }
            "stride" => {
                let s = e.integer()?;
                if s == 0 {
                    return Err(e.violation("must be at least 1"));
                }
                self.stride = e.slot(s);
            }
            "output_dir" => {
                if e.value.is_empty() {
                    return Err(e.type_error("a path"));
                }
                self.output_dir = Some(PathBuf::from(e.value));
            }
            "seed" => {
                self.seed = Some(e.value.parse().map_err(|_| e.type_error("a nonnegative integer"))?)
            }
            "tau_list" => {
                let v = e.reals()?;
                if v.iter().any(|&t| t <= 0.0) {
                    return Err(e.violation("entries must be positive"));
                }
                self.tau_list = e.slot(v);
            }
            "n_list" => {
                let v = e.integers()?;
                if let Some(bad) = v.iter().find(|&&n| !valid_n(n)) {
                    return Err(e.violation(format!("entries must be even and at least 4, got {bad}")));
                }
                self.n_list = e.slot(v);
            }
            "snapshot_times" => {
                let v = e.reals()?;
                if v.iter().any(|&t| t < 0.0) {
                    return Err(e.violation("entries must be nonnegative"));
                }
                self.snapshot_times = e.slot(v);
            }
            "raw_fields" => self.raw_fields = Some(e.boolean()?),
            "check_max_rh" => self.checks.max_rh = e.positive()?,
            "check_order" => self.checks.order = e.positive()?,
            "check_order_tol" => self.checks.order_tol = e.positive()?,
            "check_min_decades" => self.checks.min_decades = e.positive()?,
            "check_error_floor" => self.checks.error_floor = e.positive()?,
            _ => unreachable!("key list and setter out of sync"),
        }
        Ok(())
    }

    fn finish(self) -> Result<ExperimentConfig, ConfigError> {
        fn need<T>(s: Option<Slot<T>>, key: &str) -> Result<Slot<T>, ConfigError> {
            s.ok_or_else(|| ConfigError::violation(None, key, "is required"))
        }
        let alpha = need(self.alpha, "alpha")?;
        let dim = need(self.dim, "dim")?;
        let domain = need(self.domain, "domain")?;
        let n = need(self.n, "n")?;
        let tau = need(self.tau, "tau")?;
        let t_end = need(self.t_end, "t_end")?;
        let initial = need(self.initial, "initial")?;
        let tau_list = self.tau_list.map_or_else(Vec::new, |s| s.value);
        let snapshots = self.snapshot_times.unwrap_or(Slot {
            value: Vec::new(),
            line: None,
        });

        if dim.value == 2 && initial.value == InitialSpec::ChirpedGaussian {
            return Err(ConfigError::violation(
                initial.line,
                "initial",
                "chirped_gaussian is defined for dim=1 only",
            ));
        }
        let integral = |t: f64| {
            let r = t_end.value / t;
            (r - r.round()).abs() <= 1e-9 * r && r.round() >= 1.0
        };
        if !integral(tau.value) {
            let line = tau.line.or(t_end.line);
            return Err(ConfigError::violation(
                line,
                "tau",
                format!("must divide t_end={} into an integer number of steps, got {}", t_end.value, tau.value),
            ));
        }
        if let Some(bad) = tau_list.iter().find(|&&t| !integral(t)) {
            return Err(ConfigError::violation(
                None,
                "tau_list",
                format!("entry {bad} does not divide t_end={} into an integer number of steps", t_end.value),
            ));
        }
        for &t in &snapshots.value {
            let r = t / tau.value;
            if t > t_end.value * (1.0 + 1e-12) || (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                return Err(ConfigError::violation(
                    snapshots.line,
                    "snapshot_times",
                    format!("entry {t} is not a step time in [0, {}]", t_end.value),
                ));
            }
        }

        Ok(ExperimentConfig {
            preset: self.preset,
            dim: dim.value,
            domain: domain.value,
            n: n.value,
            alpha: alpha.value,
            gamma: self.gamma.map_or(1.0, |s| s.value),
            beta: self.beta.map_or(0.0, |s| s.value),
            potential: self.potential.map_or(PotentialSpec::Zero, |s| s.value),
            initial: initial.value,
            c0: self.c0.map_or(0.0, |s| s.value),
            tau: tau.value,
            t_end: t_end.value,
            scheme: self.scheme.map_or(Scheme::Fsav, |s| s.value),
            stride: self.stride.map_or(1, |s| s.value),
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            seed: self.seed.unwrap_or(0),
            tau_list,
            n_list: self.n_list.map_or_else(Vec::new, |s| s.value),
            snapshot_times: snapshots.value,
            raw_fields: self.raw_fields.unwrap_or(false),
            checks: self.checks,
        })
    }
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::TypeError {
                line,
                key: content.to_string(),
                expected: "a key=value pair",
                value: content.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::violation(Some(line), key, "is given more than once"));
        }
        entries.push(Entry { line, key, value });
    }

    let mut builder = Builder::default();
    if let Some(e) = entries.iter().find(|e| e.key == "preset") {
        let p = preset(e.value).ok_or_else(|| {
            e.violation(format!(
                "names no known preset `{}` (known: {})",
                e.value,
                preset_names().join(", ")
            ))
        })?;
        builder.apply_preset(p);
    }
    for e in entries.iter().filter(|e| e.key != "preset") {
        builder.set(e)?;
    }
    builder.finish()
}
