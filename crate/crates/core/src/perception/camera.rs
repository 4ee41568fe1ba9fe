use crate::world_sim::{SensorSnapshot, VisibleObject};

use super::PerceptionError;

/// Nominal object height used to size synthesized boxes vertically.
const NOMINAL_HEIGHT: f64 = 1.0;

/// Pinhole camera looking along the robot heading. Bearing is positive to
/// the left, so it maps to smaller pixel columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub width: u32,
    pub height: u32,
    pub hfov: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            hfov: 87f64.to_radians(),
        }
    }
}

impl CameraModel {
    pub fn focal(&self) -> f64 {
        f64::from(self.width) / 2.0 / (self.hfov / 2.0).tan()
    }

    /// Column of the ray at `bearing`, or `None` behind or beside the lens.
    pub fn column(&self, bearing: f64) -> Option<f64> {
        if bearing.abs() >= std::f64::consts::FRAC_PI_2 {
            return None;
        }
        let u = f64::from(self.width) / 2.0 - self.focal() * bearing.tan();
        (0.0..=f64::from(self.width)).contains(&u).then_some(u)
    }

    pub fn bearing_of_column(&self, u: f64) -> f64 {
        ((f64::from(self.width) / 2.0 - u) / self.focal()).atan()
    }
}

/// Axis-aligned pixel box within a source image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub image_size: (u32, u32),
}

impl BBox {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        let (w, h) = (f64::from(self.image_size.0), f64::from(self.image_size.1));
        let ordered = self.x_min < self.x_max && self.y_min < self.y_max;
        let inside = self.x_min >= 0.0 && self.y_min >= 0.0 && self.x_max <= w && self.y_max <= h;
        match (ordered, inside) {
            (false, _) => Err(PerceptionError::InvalidBBox),
            (true, false) => Err(PerceptionError::BBoxOutsideImage),
            _ => Ok(()),
        }
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    fn half_angle(&self, camera: &CameraModel) -> f64 {
        (camera.bearing_of_column(self.x_min) - camera.bearing_of_column(self.x_max)).abs() / 2.0
    }
}

/// Box an object would occupy given its bearing, range and radius. The box
/// is kept symmetric about the object's column so its center stays on the
/// object ray; `None` when the ray falls outside the image.
pub fn synthesize_bbox(obj: &VisibleObject, camera: &CameraModel) -> Option<BBox> {
    let u = camera.column(obj.bearing)?;
    let range = obj.range.max(1e-3);
    let f = camera.focal();
    let (w, h) = (f64::from(camera.width), f64::from(camera.height));
    let half_w = (f * obj.object.radius.max(0.05) / range).min(u).min(w - u);
    if half_w <= 0.0 {
        return None;
    }
    let half_h = (f * NOMINAL_HEIGHT / 2.0 / range).min(h / 2.0);
    Some(BBox {
        x_min: u - half_w,
        x_max: u + half_w,
        y_min: h / 2.0 - half_h,
        y_max: h / 2.0 + half_h,
        image_size: (camera.width, camera.height),
    })
}

/// World position of the box center: the snapshot pose composed with the
/// center ray's bearing and its depth. Depth comes from the visible object
/// nearest to that ray inside the box, else from the range scan.
pub fn localize(bbox: &BBox, snapshot: &SensorSnapshot, camera: &CameraModel) -> Result<(f64, f64), PerceptionError> {
    bbox.validate()?;
    let bearing = camera.bearing_of_column(bbox.center().0);
    let half = bbox.half_angle(camera);
    let depth = snapshot
        .visible
        .iter()
        .map(|v| ((v.bearing - bearing).abs(), v.range))
        .filter(|(d, _)| *d <= half + 1e-9)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, r)| r)
        .or_else(|| snapshot.range_at(bearing))
        .ok_or(PerceptionError::NoDepth)?;
    Ok(snapshot.pose.project(bearing, depth))
}
