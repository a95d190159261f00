//! Flat `key = value` scenario files.
//!
//! ```text
//! # comment
//! name = helix
//! controller = geometric-pid
//! h = 0.01              # s
//! gains.k = 1, 1.1, 1.2
//! disturbance.enabled = true
//! ```
//!
//! Vectors are comma separated, optionally in brackets. Unset keys keep the
//! defaults of [`ScenarioConfig`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::control::{ClassicPidGains, ControllerGains};
use crate::error::{Error, Result};
use crate::harness::{AttitudeReference, ControllerKind, DisturbanceModel, ScenarioConfig};
use crate::rigid_body::InertiaModel;
use crate::so3::{GainMatrixK, Mat3, Vec3};

pub const KEYS: &[&str] = &[
    "name",
    "controller",
    "h",
    "duration",
    "gravity",
    "mass",
    "inertia",
    "gains.kp",
    "gains.ki",
    "gains.kdi",
    "gains.kd",
    "gains.k",
    "gains.p",
    "gains.lv",
    "classic.kp",
    "classic.ki",
    "classic.kd",
    "initial.attitude",
    "initial.omega",
    "initial.position_offset",
    "initial.velocity_offset",
    "initial.random_angle",
    "seed",
    "helix.radius",
    "helix.rate",
    "helix.climb_rate",
    "helix.center",
    "helix.phase",
    "reference.yaw",
    "reference.mode",
    "reference.file",
    "disturbance.enabled",
    "disturbance.constant",
    "disturbance.amplitude",
    "disturbance.frequency",
    "disturbance.phase",
    "output.dir",
];

/// Raw key-value pairs; later assignments replace earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            raw.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, item: &str) -> Result<()> {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn scalar(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("{key}: expected a number, got {v:?}")))
            })
            .transpose()
    }

    fn vector(&self, key: &str) -> Result<Option<Vec3>> {
        self.get(key).map(|v| parse_vec3(key, v)).transpose()
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Config(format!(
                    "{key}: expected true or false, got {v:?}"
                ))),
            })
            .transpose()
    }

    /// A 3-vector as a diagonal matrix, or a scalar as a multiple of `I`.
    fn diag_matrix(&self, key: &str) -> Result<Option<Mat3>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        if let Ok(s) = v.parse::<f64>() {
            return Ok(Some(Mat3::identity() * s));
        }
        Ok(Some(Mat3::from_diagonal(&parse_vec3(key, v)?)))
    }

    pub fn build(&self) -> Result<ScenarioConfig> {
        let cfg_err = |e: Error| match e {
            Error::InvalidParameter(m) => Error::Config(m),
            other => other,
        };
        let mut cfg = ScenarioConfig::default();
        if let Some(v) = self.get("name") {
            if v.is_empty() || v.contains(['/', '\\']) {
                return Err(Error::Config(format!(
                    "name {v:?} is not a plain file stem"
                )));
            }
            cfg.name = v.to_string();
        }
        if let Some(v) = self.get("controller") {
            cfg.controller = ControllerKind::parse(v)
                .ok_or_else(|| Error::Config(format!("unknown controller {v:?}")))?;
        }
        cfg.h = self.scalar("h")?.unwrap_or(cfg.h);
        cfg.duration = self.scalar("duration")?.unwrap_or(cfg.duration);
        cfg.gravity = self.scalar("gravity")?.unwrap_or(cfg.gravity);

        let mass = self.scalar("mass")?.unwrap_or(cfg.inertia.mass());
        let j = self.diag_matrix("inertia")?.unwrap_or(*cfg.inertia.j());
        cfg.inertia = InertiaModel::new(j, mass).map_err(cfg_err)?;

        let base = ControllerGains::default_for_mass(mass);
        let kp = self.scalar("gains.kp")?.unwrap_or(base.kp());
        let ki = self.scalar("gains.ki")?.unwrap_or(base.ki());
        let kdi = match (self.scalar("gains.kdi")?, self.scalar("gains.kd")?) {
            (Some(kdi), Some(kd)) if (ki + kdi - kd).abs() > 1e-12 * kd.abs().max(1.0) => {
                return Err(Error::Config(format!(
                    "gains.kd = {kd} must equal gains.ki + gains.kdi = {}",
                    ki + kdi
                )))
            }
            (Some(kdi), _) => kdi,
            (None, Some(kd)) => kd - ki,
            (None, None) => base.kdi(),
        };
        let k = match self.vector("gains.k")? {
            Some(v) => GainMatrixK::new(v.x, v.y, v.z).map_err(cfg_err)?,
            None => *base.k(),
        };
        let p = self.diag_matrix("gains.p")?.unwrap_or(*base.p());
        let lv = self.diag_matrix("gains.lv")?.unwrap_or(*base.lv());
        cfg.gains = ControllerGains::new(kp, ki, kdi, k, p, lv).map_err(cfg_err)?;

        let matched = ClassicPidGains::matching(&cfg.gains);
        cfg.classic = ClassicPidGains {
            kp: self.vector("classic.kp")?.unwrap_or(matched.kp),
            ki: self.vector("classic.ki")?.unwrap_or(matched.ki),
            kd: self.vector("classic.kd")?.unwrap_or(matched.kd),
        };

        let ic = &mut cfg.initial;
        ic.attitude = self.vector("initial.attitude")?.unwrap_or(ic.attitude);
        ic.omega = self.vector("initial.omega")?.unwrap_or(ic.omega);
        ic.position_offset = self
            .vector("initial.position_offset")?
            .unwrap_or(ic.position_offset);
        ic.velocity_offset = self
            .vector("initial.velocity_offset")?
            .unwrap_or(ic.velocity_offset);
        ic.random_angle = self
            .scalar("initial.random_angle")?
            .unwrap_or(ic.random_angle);
        if let Some(v) = self.get("seed") {
            cfg.seed = v.parse().map_err(|_| {
                Error::Config(format!("seed: expected an unsigned integer, got {v:?}"))
            })?;
        }

        let hx = &mut cfg.helix;
        hx.radius = self.scalar("helix.radius")?.unwrap_or(hx.radius);
        hx.angular_rate = self.scalar("helix.rate")?.unwrap_or(hx.angular_rate);
        hx.climb_rate = self.scalar("helix.climb_rate")?.unwrap_or(hx.climb_rate);
        hx.center = self.vector("helix.center")?.unwrap_or(hx.center);
        hx.phase = self.scalar("helix.phase")?.unwrap_or(hx.phase);

        cfg.yaw = self.scalar("reference.yaw")?.unwrap_or(cfg.yaw);
        if let Some(v) = self.get("reference.mode") {
            cfg.attitude_reference = match v {
                "feedback" => AttitudeReference::Feedback,
                "feedforward" => AttitudeReference::Feedforward,
                _ => return Err(Error::Config(format!("unknown reference.mode {v:?}"))),
            };
        }
        cfg.reference_file = self.get("reference.file").map(PathBuf::from);

        let enabled = self.boolean("disturbance.enabled")?.unwrap_or(false);
        if enabled {
            let base = DisturbanceModel::default();
            cfg.disturbance = Some(DisturbanceModel {
                constant: self
                    .vector("disturbance.constant")?
                    .unwrap_or(base.constant),
                amplitude: self
                    .vector("disturbance.amplitude")?
                    .unwrap_or(base.amplitude),
                frequency: self
                    .vector("disturbance.frequency")?
                    .unwrap_or(base.frequency),
                phase: self.vector("disturbance.phase")?.unwrap_or(base.phase),
            });
        }
        if let Some(v) = self.get("output.dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        cfg.validate().map_err(cfg_err)?;
        Ok(cfg)
    }
}

fn parse_vec3(key: &str, v: &str) -> Result<Vec3> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<f64> = inner
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("{key}: expected three numbers, got {v:?}")))?;
    match parts[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(Error::Config(format!(
            "{key}: expected three numbers, got {v:?}"
        ))),
    }
}

/// Reads a config file, applies overrides in order, and builds the scenario.
pub fn load(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut raw = RawConfig::parse(&text)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    raw.build()
}
