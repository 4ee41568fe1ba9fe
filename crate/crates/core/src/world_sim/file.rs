//! TOML world files.
//!
//! ```toml
//! name = "minimal"
//! [grid]
//! resolution = 0.1
//! origin = [0.0, 0.0]
//! rows = ["....", "....", ...]   # top row first; '.' free, '#' occupied
//! [robot_start]
//! x = 0.2
//! y = 0.2
//! theta = 0.0
//! [[objects]]
//! label = "chair"
//! x = 0.3
//! y = 0.1
//! radius = 0.2
//! [[rooms]]                      # optional named regions
//! label = "kitchen"
//! min = [0.0, 0.0]
//! max = [2.0, 2.0]
//! [sensor]                       # optional
//! fov_deg = 87.0
//! max_range = 10.0
//! beams = 90
//! ```
//!
//! `width` and `height` may be given in `[grid]`; when present they must
//! match the rows.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grid::OccupancyGrid;
use super::world::{Room, SceneObject, SensorConfig, WorldModel};
use crate::geometry::Pose2;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("cannot read world file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse world file: {0}")]
    Parse(String),
    #[error("invalid world: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<WorldViolation>),
}

/// One validation failure in a world file.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldViolation {
    Grid(String),
    RobotStartOccupied { cell: (usize, usize) },
    RobotStartOutside { x: f64, y: f64 },
    ObjectOutside { label: String, x: f64, y: f64 },
    EmptyLabel { index: usize },
    NegativeRadius { label: String },
    Sensor(String),
}

impl fmt::Display for WorldViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorldViolation::Grid(m) => write!(f, "grid: {m}"),
            WorldViolation::RobotStartOccupied { cell } => {
                write!(f, "robot_start lies on occupied cell ({}, {})", cell.0, cell.1)
            }
            WorldViolation::RobotStartOutside { x, y } => {
                write!(f, "robot_start ({x}, {y}) is outside the grid")
            }
            WorldViolation::ObjectOutside { label, x, y } => {
                write!(f, "object '{label}' at ({x}, {y}) is outside the grid")
            }
            WorldViolation::EmptyLabel { index } => write!(f, "object #{index} has an empty label"),
            WorldViolation::NegativeRadius { label } => {
                write!(f, "object '{label}' has a negative radius")
            }
            WorldViolation::Sensor(m) => write!(f, "sensor: {m}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    pub resolution: f64,
    #[serde(default)]
    pub origin: [f64; 2],
    pub rows: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StartSection {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorSection {
    #[serde(default = "default_fov_deg")]
    pub fov_deg: f64,
    #[serde(default = "default_max_range")]
    pub max_range: f64,
    #[serde(default = "default_beams")]
    pub beams: usize,
}

fn default_fov_deg() -> f64 {
    87.0
}
fn default_max_range() -> f64 {
    10.0
}
fn default_beams() -> usize {
    90
}

/// Serialized form of a world.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldFile {
    #[serde(default)]
    pub name: String,
    pub grid: GridSection,
    pub robot_start: StartSection,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub rooms: Vec<Room>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorSection>,
}

impl WorldFile {
    /// Check every invariant, collecting all violations.
    pub fn validate(&self) -> Result<WorldModel, Vec<WorldViolation>> {
        let mut violations = Vec::new();
        let origin = (self.grid.origin[0], self.grid.origin[1]);
        let grid = match OccupancyGrid::from_rows(&self.grid.rows, self.grid.resolution, origin) {
            Ok(g) => g,
            Err(m) => return Err(vec![WorldViolation::Grid(m)]),
        };
        if let Some(w) = self.grid.width.filter(|&w| w != grid.width()) {
            violations.push(WorldViolation::Grid(format!(
                "declared width {w} but rows have {}",
                grid.width()
            )));
        }
        if let Some(h) = self.grid.height.filter(|&h| h != grid.height()) {
            violations.push(WorldViolation::Grid(format!(
                "declared height {h} but there are {} rows",
                grid.height()
            )));
        }
        let s = self.robot_start;
        match grid.world_to_cell(s.x, s.y) {
            None => violations.push(WorldViolation::RobotStartOutside { x: s.x, y: s.y }),
            Some(cell) if grid.is_occupied(cell) => violations.push(WorldViolation::RobotStartOccupied { cell }),
            Some(_) => {}
        }
        for (index, obj) in self.objects.iter().enumerate() {
            if obj.label.trim().is_empty() {
                violations.push(WorldViolation::EmptyLabel { index });
            }
            if !grid.contains(obj.x, obj.y) {
                violations.push(WorldViolation::ObjectOutside {
                    label: obj.label.clone(),
                    x: obj.x,
                    y: obj.y,
                });
            }
            if obj.radius < 0.0 {
                violations.push(WorldViolation::NegativeRadius {
                    label: obj.label.clone(),
                });
            }
        }
        let sensor = match &self.sensor {
            Some(sec) => {
                if !(sec.fov_deg > 0.0 && sec.fov_deg <= 360.0) {
                    violations.push(WorldViolation::Sensor(format!(
                        "fov_deg {} out of (0, 360]",
                        sec.fov_deg
                    )));
                }
                if sec.max_range.is_nan() || sec.max_range <= 0.0 {
                    violations.push(WorldViolation::Sensor("max_range must be > 0".into()));
                }
                if sec.beams == 0 {
                    violations.push(WorldViolation::Sensor("beams must be >= 1".into()));
                }
                SensorConfig {
                    fov: sec.fov_deg.to_radians(),
                    max_range: sec.max_range,
                    beams: sec.beams,
                }
            }
            None => SensorConfig::default(),
        };
        if !violations.is_empty() {
            return Err(violations);
        }
        let mut world = WorldModel::new(self.name.clone(), grid, Pose2::new(s.x, s.y, s.theta));
        world.objects = self.objects.clone();
        world.rooms = self.rooms.clone();
        world.sensor = sensor;
        Ok(world)
    }
}

/// Parse and validate a world from TOML text.
pub fn parse_world(text: &str) -> Result<WorldModel, WorldError> {
    let file: WorldFile = toml::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))?;
    file.validate().map_err(WorldError::Invalid)
}

/// Load and validate a world file.
pub fn load_world(path: impl AsRef<Path>) -> Result<WorldModel, WorldError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| WorldError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_world(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
[grid]
width = 5
height = 5
resolution = 1.0
origin = [0.0, 0.0]
rows = [".....", ".....", ".....", ".....", "....."]
[robot_start]
x = 2.5
y = 2.5
theta = 0.0
"#;

    #[test]
    fn minimal_world_loads() {
        let w = parse_world(MINIMAL).unwrap();
        assert_eq!((w.grid.width(), w.grid.height()), (5, 5));
        assert!(w.objects.is_empty());
        assert_eq!(w.pose(), Pose2::new(2.5, 2.5, 0.0));
    }

    #[test]
    fn start_on_wall_names_cell() {
        let text = MINIMAL.replace(
            r#"".....", ".....", ".....", ".....", "....."]"#,
            r#"".....", ".....", "..#..", ".....", "....."]"#,
        );
        match parse_world(&text).unwrap_err() {
            WorldError::Invalid(v) => {
                assert_eq!(v, vec![WorldViolation::RobotStartOccupied { cell: (2, 2) }]);
                assert!(v[0].to_string().contains("(2, 2)"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn object_outside_grid_rejected() {
        let text = format!("{MINIMAL}\n[[objects]]\nlabel = \"chair\"\nx = 7.0\ny = 1.0\nradius = 0.2\n");
        let err = parse_world(&text).unwrap_err();
        assert!(matches!(err, WorldError::Invalid(ref v) if matches!(v[0], WorldViolation::ObjectOutside { .. })));
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(matches!(parse_world("grid = 3"), Err(WorldError::Parse(_))));
        assert!(matches!(
            load_world("/definitely/not/here.toml"),
            Err(WorldError::Io { .. })
        ));
    }
}
