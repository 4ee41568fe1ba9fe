use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Six-component velocity command: linear m/s and angular rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub linear: Vector3,
    pub angular: Vector3,
}

/// Velocity limits applied to every published command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistLimits {
    pub v_max: f64,
    pub w_max: f64,
}

impl Default for TwistLimits {
    fn default() -> Self {
        Self { v_max: 0.8, w_max: 1.5 }
    }
}

impl Twist {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Planar command: forward speed and yaw rate.
    pub fn planar(v_x: f64, w_z: f64) -> Self {
        Self {
            linear: Vector3 { x: v_x, y: 0.0, z: 0.0 },
            angular: Vector3 { x: 0.0, y: 0.0, z: w_z },
        }
    }

    pub fn v_x(&self) -> f64 {
        self.linear.x
    }

    pub fn w_z(&self) -> f64 {
        self.angular.z
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    /// True if any component the planar robot ignores is non-zero.
    pub fn has_nonplanar(&self) -> bool {
        self.linear.y != 0.0 || self.linear.z != 0.0 || self.angular.x != 0.0 || self.angular.y != 0.0
    }

    pub fn clamped(&self, limits: &TwistLimits) -> Self {
        let mut t = *self;
        t.linear.x = t.linear.x.clamp(-limits.v_max, limits.v_max);
        t.angular.z = t.angular.z.clamp(-limits.w_max, limits.w_max);
        t
    }

    pub fn within(&self, limits: &TwistLimits) -> bool {
        self.linear.x.abs() <= limits.v_max && self.angular.z.abs() <= limits.w_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamping_respects_limits() {
        let l = TwistLimits::default();
        let t = Twist::planar(3.0, -9.0).clamped(&l);
        assert_eq!((t.v_x(), t.w_z()), (0.8, -1.5));
        assert!(t.within(&l));
        assert!(Twist::zero().is_zero());
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(Twist::planar(0.5, 0.1)).unwrap();
        assert_eq!(v["linear"]["x"], 0.5);
        assert_eq!(v["angular"]["z"], 0.1);
    }
}
