//! Scenario description and its `key = value` text format.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::signal::{ImpulseSignal, SignalMode};
use crate::posture::InertiaLabels;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Initial attitude (rad) and angle rates (rad/s) of the rolling ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditions {
    pub theta: f64,
    pub psi: f64,
    pub phi: f64,
    pub theta_dot: f64,
    pub psi_dot: f64,
    pub phi_dot: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self {
            theta: 0.0,
            psi: 0.0,
            phi: 0.0,
            theta_dot: 0.0,
            psi_dot: std::f64::consts::FRAC_PI_6,
            phi_dot: std::f64::consts::TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Stop the run when the normal force falls through zero.
    pub contact_event: bool,
}

impl Default for CascadeSettings {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, contact_event: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighFiSettings {
    pub dt: f64,
    pub elements: usize,
}

impl Default for HighFiSettings {
    fn default() -> Self {
        Self { dt: 2e-5, elements: 150 }
    }
}

/// One experiment: slope, ring, initial motion, posture input and solver
/// settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub slope_deg: f64,
    pub gravity: f64,
    pub ring_mass: f64,
    pub ring_perimeter: f64,
    pub inertia_labels: InertiaLabels,
    pub init: InitialConditions,
    pub duration: f64,
    /// Baseline semi-axis and bump shape. `signal.b_prime` absent means no
    /// input: `b` stays at `b0`.
    pub signal: ImpulseSignal,
    pub signal_enabled: bool,
    pub signal_mode: SignalMode,
    pub cascade: CascadeSettings,
    pub highfi: HighFiSettings,
    pub output_dt: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            slope_deg: 15.0,
            gravity: 9.81,
            ring_mass: 6.0,
            ring_perimeter: 1.6,
            inertia_labels: InertiaLabels::Physical,
            init: InitialConditions::default(),
            duration: 4.0,
            signal: ImpulseSignal::default(),
            signal_enabled: false,
            signal_mode: SignalMode::Slaved,
            cascade: CascadeSettings::default(),
            highfi: HighFiSettings::default(),
            output_dt: 0.002,
        }
    }
}

type Setter = fn(&mut ScenarioConfig, &str) -> Result<(), String>;
type Getter = fn(&ScenarioConfig) -> Option<String>;

fn num(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{v}` is not finite"))
    }
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{v}` is not `true` or `false`")),
    }
}

fn fmt(x: f64) -> Option<String> {
    Some(format!("{x:?}"))
}

#[allow(clippy::unit_arg)]
const KEYS: &[(&str, Setter, Getter)] = &[
    ("slope_deg", |c, v| Ok(c.slope_deg = num(v)?), |c| fmt(c.slope_deg)),
    ("gravity", |c, v| Ok(c.gravity = num(v)?), |c| fmt(c.gravity)),
    ("ring.mass", |c, v| Ok(c.ring_mass = num(v)?), |c| fmt(c.ring_mass)),
    ("ring.perimeter", |c, v| Ok(c.ring_perimeter = num(v)?), |c| fmt(c.ring_perimeter)),
    (
        "ring.inertia_labels",
        |c, v| {
            c.inertia_labels = match v {
                "physical" => InertiaLabels::Physical,
                "coordinate" => InertiaLabels::Coordinate,
                _ => return Err(format!("`{v}` is not `physical` or `coordinate`")),
            };
            Ok(())
        },
        |c| {
            Some(
                match c.inertia_labels {
                    InertiaLabels::Physical => "physical",
                    InertiaLabels::Coordinate => "coordinate",
                }
                .into(),
            )
        },
    ),
    ("init.theta", |c, v| Ok(c.init.theta = num(v)?), |c| fmt(c.init.theta)),
    ("init.psi", |c, v| Ok(c.init.psi = num(v)?), |c| fmt(c.init.psi)),
    ("init.phi", |c, v| Ok(c.init.phi = num(v)?), |c| fmt(c.init.phi)),
    ("init.theta_dot", |c, v| Ok(c.init.theta_dot = num(v)?), |c| fmt(c.init.theta_dot)),
    ("init.psi_dot", |c, v| Ok(c.init.psi_dot = num(v)?), |c| fmt(c.init.psi_dot)),
    ("init.phi_dot", |c, v| Ok(c.init.phi_dot = num(v)?), |c| fmt(c.init.phi_dot)),
    ("duration", |c, v| Ok(c.duration = num(v)?), |c| fmt(c.duration)),
    ("signal.b0", |c, v| Ok(c.signal.b0 = num(v)?), |c| fmt(c.signal.b0)),
    (
        "signal.b_prime",
        |c, v| {
            c.signal.b_prime = num(v)?;
            c.signal_enabled = true;
            Ok(())
        },
        |c| c.signal_enabled.then(|| format!("{:?}", c.signal.b_prime)),
    ),
    ("signal.t0", |c, v| Ok(c.signal.t0 = num(v)?), |c| fmt(c.signal.t0)),
    ("signal.gamma", |c, v| Ok(c.signal.gamma = num(v)?), |c| fmt(c.signal.gamma)),
    (
        "signal.mode",
        |c, v| {
            c.signal_mode = match v {
                "slaved" => SignalMode::Slaved,
                "independent" => SignalMode::Independent,
                _ => return Err(format!("`{v}` is not `slaved` or `independent`")),
            };
            Ok(())
        },
        |c| Some(c.signal_mode.as_str().into()),
    ),
    ("cascade.rtol", |c, v| Ok(c.cascade.rtol = num(v)?), |c| fmt(c.cascade.rtol)),
    ("cascade.atol", |c, v| Ok(c.cascade.atol = num(v)?), |c| fmt(c.cascade.atol)),
    (
        "cascade.contact_event",
        |c, v| Ok(c.cascade.contact_event = flag(v)?),
        |c| Some(c.cascade.contact_event.to_string()),
    ),
    ("highfi.dt", |c, v| Ok(c.highfi.dt = num(v)?), |c| fmt(c.highfi.dt)),
    (
        "highfi.elements",
        |c, v| {
            c.highfi.elements = v.parse().map_err(|_| format!("`{v}` is not a positive integer"))?;
            Ok(())
        },
        |c| Some(c.highfi.elements.to_string()),
    ),
    ("output.dt", |c, v| Ok(c.output_dt = num(v)?), |c| fmt(c.output_dt)),
];

/// Every accepted key, in serialization order.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|k| k.0)
}

impl ScenarioConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let (_, setter, _) = KEYS
            .iter()
            .find(|k| k.0 == key)
            .ok_or_else(|| format!("unknown key `{key}`"))?;
        setter(self, value)
    }

    /// Largest semi-axis the input reaches.
    pub fn peak_semi_axis(&self) -> f64 {
        if self.signal_enabled {
            self.signal.b0 + self.signal.b_prime.max(0.0)
        } else {
            self.signal.b0
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if !(0.0..90.0).contains(&self.slope_deg) {
            return invalid(format!("slope_deg must lie in [0, 90), got {}", self.slope_deg));
        }
        for (name, v) in [
            ("gravity", self.gravity),
            ("ring.mass", self.ring_mass),
            ("ring.perimeter", self.ring_perimeter),
            ("duration", self.duration),
            ("signal.b0", self.signal.b0),
            ("signal.gamma", self.signal.gamma),
            ("cascade.rtol", self.cascade.rtol),
            ("cascade.atol", self.cascade.atol),
            ("highfi.dt", self.highfi.dt),
            ("output.dt", self.output_dt),
        ] {
            if !(v > 0.0) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if self.highfi.elements < 4 || !self.highfi.elements.is_multiple_of(2) {
            return invalid(format!("highfi.elements must be even and at least 4, got {}", self.highfi.elements));
        }
        if self.highfi.dt > 1e-4 {
            return invalid(format!("highfi.dt must not exceed 1e-4 s (contact stability), got {}", self.highfi.dt));
        }
        if self.output_dt < self.highfi.dt {
            return invalid(format!("output.dt ({}) must not be below highfi.dt ({})", self.output_dt, self.highfi.dt));
        }
        if self.signal_enabled && !(0.0..=self.duration).contains(&self.signal.t0) {
            return invalid(format!("signal.t0 = {} lies outside the horizon [0, {}]", self.signal.t0, self.duration));
        }
        let cap = self.ring_perimeter / 4.0;
        let peak = self.peak_semi_axis();
        if !(4.0 * peak < self.ring_perimeter) {
            return Err(ConfigError::Infeasible(format!(
                "peak semi-axis b0 + b' = {peak} m needs 4·(b0 + b') = {} < P = {} m; semi-axes are capped at P/4 = {cap} m",
                4.0 * peak,
                self.ring_perimeter
            )));
        }
        if self.signal_enabled && self.signal.b0 + self.signal.b_prime <= 0.0 {
            return Err(ConfigError::Infeasible(format!(
                "minimum semi-axis b0 + b' = {} m must stay positive",
                self.signal.b0 + self.signal.b_prime
            )));
        }
        Ok(())
    }

    /// Canonical text form; [`parse_config`] of it gives back `self`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (key, _, get) in KEYS {
            if let Some(v) = get(self) {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Parses and validates a scenario. Unset keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Parse { line: i + 1, message };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        cfg.set(key.trim(), value.trim()).map_err(err)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
