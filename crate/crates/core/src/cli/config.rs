//! Run configuration: defaults, presets, `key = value` files and flag
//! overrides, applied in that order.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::integrators::{Dynamics, Scheme, ThermoState};
use crate::lattice::{Border, BoundaryCondition, LatticeError, ModelParams, SpinLattice};
use crate::vec3::Vec3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field}: {msg}")]
    Invalid { field: String, msg: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: PathBuf, line: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        msg: msg.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    Periodic,
    Zero,
    /// Every border vector is `+z`.
    Fixed,
}

impl BcKind {
    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "periodic" => Ok(BcKind::Periodic),
            "zero" => Ok(BcKind::Zero),
            "fixed" => Ok(BcKind::Fixed),
            _ => Err(invalid("bc", format!("expected periodic, zero or fixed, got `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Example1,
    Example2,
    Example3,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "example1" => Ok(Preset::Example1),
            "example2" => Ok(Preset::Example2),
            "example3" => Ok(Preset::Example3),
            _ => Err(invalid("preset", format!("expected example1, example2 or example3, got `{s}`"))),
        }
    }

    pub fn config(self) -> RunConfig {
        let base = RunConfig {
            n: 50,
            bc: BcKind::Periodic,
            exchange: 1.0,
            ..RunConfig::default()
        };
        match self {
            // Damped ferromagnet settling from a random start.
            Preset::Example1 => RunConfig {
                scheme: Scheme::Dissipative,
                anisotropy: Vec3::new(1.0, 1.0, 1.1),
                alpha0: -0.5,
                dt: 0.1,
                steps: 1000,
                ..base
            },
            Preset::Example2 => RunConfig {
                scheme: Scheme::Thermostatted,
                anisotropy: Vec3::new(1.0, 1.0, 0.9),
                temperature: 0.04,
                dt: 0.01,
                steps: 2000,
                ..base
            },
            // "Wandering vortices".
            Preset::Example3 => RunConfig {
                scheme: Scheme::Thermostatted,
                anisotropy: Vec3::new(1.0, 1.0, 0.9),
                temperature: 0.05,
                dt: 0.05,
                steps: 600,
                ..base
            },
        }
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme, ConfigError> {
    match s {
        "conservative" => Ok(Scheme::Conservative),
        "dissipative" => Ok(Scheme::Dissipative),
        "thermostat" | "thermostatted" => Ok(Scheme::Thermostatted),
        "rk4" | "rk4-thermostat" => Ok(Scheme::Rk4Projected(Dynamics::Thermostatted)),
        "rk4-dissipative" => Ok(Scheme::Rk4Projected(Dynamics::Dissipative)),
        "rk4-conservative" => Ok(Scheme::Rk4Projected(Dynamics::Conservative)),
        _ => Err(invalid(
            "scheme",
            format!("expected conservative, dissipative, thermostat, rk4, rk4-dissipative or rk4-conservative, got `{s}`"),
        )),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub bc: BcKind,
    pub exchange: f64,
    pub anisotropy: Vec3,
    pub alpha0: f64,
    pub temperature: f64,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub record_every: usize,
    /// 0 disables snapshots.
    pub snapshot_every: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: Scheme::Thermostatted,
            n: 50,
            bc: BcKind::Periodic,
            exchange: 1.0,
            anisotropy: Vec3::new(1.0, 1.0, 1.0),
            alpha0: 0.0,
            temperature: 0.04,
            dt: 0.01,
            steps: 1000,
            seed: 0,
            record_every: 1,
            snapshot_every: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| invalid(field, format!("`{v}`: {e}")))
}

/// Comma-separated list, e.g. `0.02,0.01`.
pub fn parse_list<T: std::str::FromStr>(field: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    let items: Result<Vec<T>, _> = v.split(',').map(|s| parse_num(field, s)).collect();
    let items = items?;
    if items.is_empty() {
        return Err(invalid(field, "empty list"));
    }
    Ok(items)
}

/// Canonical key spelling: `record-every` and `record_every` are the same.
fn canonical(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Preset named in a config file plus its remaining `key = value` pairs.
pub type ConfigFile = (Option<Preset>, Vec<(String, String)>);

/// Key/value pairs from a config file, in file order. The preset, if any,
/// is returned separately since it is applied before everything else.
pub fn read_config_file(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text, path)
}

pub fn parse_config_text(text: &str, path: &Path) -> Result<ConfigFile, ConfigError> {
    let mut preset = None;
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: path.to_path_buf(),
            line: k + 1,
        })?;
        let key = canonical(key);
        let value = value.trim().to_string();
        if key == "preset" {
            preset = Some(Preset::parse(&value)?);
        } else {
            pairs.push((key, value));
        }
    }
    Ok((preset, pairs))
}

impl RunConfig {
    /// `defaults < preset < file < flags`. `flags` must not contain a preset.
    pub fn resolve(
        flag_preset: Option<Preset>,
        file: Option<ConfigFile>,
        flags: &[(String, String)],
    ) -> Result<RunConfig, ConfigError> {
        let (file_preset, file_pairs) = file.unwrap_or((None, Vec::new()));
        let mut cfg = match flag_preset.or(file_preset) {
            Some(p) => p.config(),
            None => RunConfig::default(),
        };
        for (k, v) in file_pairs.iter().chain(flags) {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = canonical(key);
        let v = value.trim();
        match key.as_str() {
            "scheme" => self.scheme = parse_scheme(v)?,
            "n" => self.n = parse_num("n", v)?,
            "bc" => self.bc = BcKind::parse(v)?,
            "jk" => self.exchange = parse_num("jk", v)?,
            "lambda" => self.anisotropy = Vec3::new(1.0, 1.0, parse_num("lambda", v)?),
            "d" | "D" => {
                let d: Vec<f64> = parse_list("D", v)?;
                if d.len() != 3 {
                    return Err(invalid("D", format!("expected three comma-separated values, got {}", d.len())));
                }
                self.anisotropy = Vec3::new(d[0], d[1], d[2]);
            }
            "alpha0" => self.alpha0 = parse_num("alpha0", v)?,
            "temperature" => self.temperature = parse_num("temperature", v)?,
            "dt" => self.dt = parse_num("dt", v)?,
            "steps" => self.steps = parse_num("steps", v)?,
            "seed" => self.seed = parse_num("seed", v)?,
            "record_every" => self.record_every = parse_num("record_every", v)?,
            "snapshot_every" => self.snapshot_every = parse_num("snapshot_every", v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(ConfigError::UnknownKey(key)),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [
            ("jk", self.exchange),
            ("D", self.anisotropy.x),
            ("D", self.anisotropy.y),
            ("D", self.anisotropy.z),
            ("alpha0", self.alpha0),
            ("temperature", self.temperature),
            ("dt", self.dt),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, format!("must be finite, got {v}")));
            }
        }
        if self.dt == 0.0 {
            return Err(invalid("dt", "must be non-zero"));
        }
        if self.n < 2 {
            return Err(invalid("n", format!("must be at least 2, got {}", self.n)));
        }
        if self.bc == BcKind::Periodic && self.n % 2 == 1 {
            return Err(invalid("n", format!("periodic boundaries need an even n, got {}", self.n)));
        }
        if self.scheme.dynamics() == Dynamics::Thermostatted && !(self.temperature > 0.0) {
            return Err(invalid("temperature", format!("must be positive for the thermostat, got {}", self.temperature)));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            exchange: self.exchange,
            anisotropy: self.anisotropy,
            alpha0: self.alpha0,
            temperature: self.temperature,
            coupling: 1.0 / self.n as f64,
        }
    }

    pub fn boundary(&self) -> BoundaryCondition {
        match self.bc {
            BcKind::Periodic => BoundaryCondition::Periodic,
            BcKind::Zero => BoundaryCondition::Zero,
            BcKind::Fixed => BoundaryCondition::Fixed(Border::uniform(self.n, Vec3::UP)),
        }
    }

    /// Random lattice from `seed`, thermostat variable at zero.
    pub fn initial_state(&self) -> Result<ThermoState, LatticeError> {
        Ok(ThermoState::new(SpinLattice::random(self.n, self.seed, self.boundary())?, 0.0))
    }
}
