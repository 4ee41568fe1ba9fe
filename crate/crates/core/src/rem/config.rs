//! Location registry and motion pattern table.
//!
//! Locations (`yaw = 2·atan2(z, w)`):
//!
//! ```toml
//! [[locations]]
//! label = "kitchen"
//! x = 4.5
//! y = 6.0
//! z = 0.0
//! w = 1.0
//! aliases = ["the kitchen"]
//! ```
//!
//! Motion patterns, each a timed sequence of planar velocity steps:
//!
//! ```toml
//! [[patterns]]
//! name = "forward"
//! steps = [{ vx = 0.5, wz = 0.0, duration = 2.0 }]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::twist::{Twist, TwistLimits};
use crate::nlu::Destination;
use crate::planner::GoalPose;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {what}: {message}")]
    Parse { what: &'static str, message: String },
    #[error("invalid {what}: {}", .violations.join("; "))]
    Invalid {
        what: &'static str,
        violations: Vec<String>,
    },
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

impl Location {
    pub fn from_yaw(label: impl Into<String>, x: f64, y: f64, yaw: f64) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            z: (yaw / 2.0).sin(),
            w: (yaw / 2.0).cos(),
            aliases: Vec::new(),
        }
    }

    pub fn goal(&self) -> GoalPose {
        GoalPose::new(self.x, self.y, 2.0 * self.z.atan2(self.w))
    }
}

/// Named navigation targets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationRegistry {
    #[serde(default)]
    pub locations: Vec<Location>,
}

impl LocationRegistry {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let reg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            what: "locations",
            message: e.to_string(),
        })?;
        let violations = reg.violations();
        if !violations.is_empty() {
            return Err(ConfigError::Invalid {
                what: "locations",
                violations,
            });
        }
        Ok(reg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, l) in self.locations.iter().enumerate() {
            if l.label.trim().is_empty() {
                out.push(format!("location #{i} has an empty label"));
            } else if !seen.insert(l.label.as_str()) {
                out.push(format!("location '{}' is defined more than once", l.label));
            }
            if ![l.x, l.y, l.z, l.w].iter().all(|v| v.is_finite()) {
                out.push(format!("location '{}' has a non-finite coordinate", l.label));
            }
            let norm = l.z * l.z + l.w * l.w;
            if (norm - 1.0).abs() > 1e-6 {
                out.push(format!("location '{}': z^2 + w^2 = {norm} (must be 1)", l.label));
            }
        }
        out
    }

    pub fn get(&self, label: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.locations.iter().map(|l| l.label.clone()).collect()
    }

    /// Add or replace a location.
    pub fn insert(&mut self, loc: Location) {
        match self.locations.iter_mut().find(|l| l.label == loc.label) {
            Some(slot) => *slot = loc,
            None => self.locations.push(loc),
        }
    }

    pub fn destinations(&self) -> Vec<Destination> {
        self.locations
            .iter()
            .map(|l| Destination {
                label: l.label.clone(),
                aliases: l.aliases.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown location '{0}'")]
pub struct UnknownLocation(pub String);

pub fn resolve_goal(label: &str, registry: &LocationRegistry) -> Result<GoalPose, UnknownLocation> {
    registry
        .get(label)
        .map(Location::goal)
        .ok_or_else(|| UnknownLocation(label.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternStep {
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub wz: f64,
    pub duration: f64,
}

impl PatternStep {
    pub fn twist(&self) -> Twist {
        Twist::planar(self.vx, self.wz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPattern {
    pub name: String,
    pub steps: Vec<PatternStep>,
}

impl MotionPattern {
    pub fn duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }
}

/// Named open-loop motion patterns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MotionPatternTable {
    #[serde(default)]
    pub patterns: Vec<MotionPattern>,
}

impl MotionPatternTable {
    pub fn parse(text: &str, limits: &TwistLimits) -> Result<Self, ConfigError> {
        let table: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            what: "patterns",
            message: e.to_string(),
        })?;
        let violations = table.violations(limits);
        if !violations.is_empty() {
            return Err(ConfigError::Invalid {
                what: "patterns",
                violations,
            });
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, limits: &TwistLimits) -> Result<Self, ConfigError> {
        Self::parse(&read(path.as_ref())?, limits)
    }

    pub fn violations(&self, limits: &TwistLimits) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for p in &self.patterns {
            if p.name.trim().is_empty() {
                out.push("pattern with an empty name".to_string());
            } else if !seen.insert(p.name.as_str()) {
                out.push(format!("pattern '{}' is defined more than once", p.name));
            }
            if p.steps.is_empty() {
                out.push(format!("pattern '{}' has no steps", p.name));
            }
            for (i, s) in p.steps.iter().enumerate() {
                if !(s.duration > 0.0 && s.duration.is_finite()) {
                    out.push(format!("pattern '{}' step {i}: duration must be > 0", p.name));
                }
                if !s.twist().within(limits) {
                    out.push(format!(
                        "pattern '{}' step {i}: (vx {}, wz {}) exceeds limits (v_max {}, w_max {})",
                        p.name, s.vx, s.wz, limits.v_max, limits.w_max
                    ));
                }
            }
        }
        out
    }

    pub fn get(&self, name: &str) -> Option<&MotionPattern> {
        self.patterns.iter().find(|p| p.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.patterns.iter().map(|p| p.name.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn quaternion_examples() {
        let mut reg = LocationRegistry::default();
        reg.insert(Location {
            label: "a".into(),
            x: 1.0,
            y: 2.0,
            z: 0.0,
            w: 1.0,
            aliases: vec![],
        });
        reg.insert(Location {
            label: "b".into(),
            x: 0.0,
            y: 0.0,
            z: SQRT_2 / 2.0,
            w: SQRT_2 / 2.0,
            aliases: vec![],
        });
        assert_eq!(resolve_goal("a", &reg).unwrap(), GoalPose::new(1.0, 2.0, 0.0));
        assert!((resolve_goal("b", &reg).unwrap().yaw - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(resolve_goal("c", &reg).unwrap_err(), UnknownLocation("c".into()));
    }

    #[test]
    fn bad_quaternion_rejected() {
        let err =
            LocationRegistry::parse("[[locations]]\nlabel = \"x\"\nx = 0.0\ny = 0.0\nz = 1.0\nw = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("z^2 + w^2 = 2"), "{err}");
    }

    #[test]
    fn pattern_over_limit_names_pattern() {
        let text = "[[patterns]]\nname = \"zoom\"\nsteps = [{ vx = 2.0, wz = 0.0, duration = 1.0 }]\n";
        let err = MotionPatternTable::parse(text, &TwistLimits::default()).unwrap_err();
        assert!(err.to_string().contains("zoom"));
        let text = "[[patterns]]\nname = \"nil\"\nsteps = [{ vx = 0.1, duration = 0.0 }]\n";
        assert!(MotionPatternTable::parse(text, &TwistLimits::default()).is_err());
    }

    proptest! {
        #[test]
        fn yaw_roundtrip(yaw in -(PI - 1e-6)..(PI - 1e-6)) {
            let loc = Location::from_yaw("g", 0.0, 0.0, yaw);
            prop_assert!((loc.goal().yaw - yaw).abs() < 1e-9);
        }
    }
}
