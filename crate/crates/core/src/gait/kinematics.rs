use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub n_segments: usize,
    /// m
    pub segment_length: f64,
    /// Largest admissible joint deflection, rad.
    pub joint_limit: f64,
    /// kg, informational.
    pub mass: f64,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            n_segments: 12,
            segment_length: 0.96 / 12.0,
            joint_limit: FRAC_PI_2,
            mass: 2.4,
        }
    }
}

impl RobotSpec {
    pub fn n_joints(&self) -> usize {
        self.n_segments.saturating_sub(1)
    }

    pub fn body_length(&self) -> f64 {
        self.n_segments as f64 * self.segment_length
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_segments < 2 {
            return Err(Error::invalid(
                "n_segments",
                format!("need at least 2, got {}", self.n_segments),
            ));
        }
        if !(self.segment_length > 0.0) {
            return Err(Error::invalid(
                "segment_length",
                format!("must be > 0, got {}", self.segment_length),
            ));
        }
        if !(self.joint_limit > 0.0) {
            return Err(Error::invalid(
                "joint_limit",
                format!("must be > 0, got {}", self.joint_limit),
            ));
        }
        Ok(())
    }
}

/// Point in the sagittal plane: `x` along the ground, `z` up, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub z: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.z - other.z)
    }
}

/// Position of the first joint and heading of the first segment (rad from +x).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SagittalPose {
    pub x: f64,
    pub z: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfCylinderObstacle {
    /// m; infinite for flat ground.
    pub radius: f64,
    /// Position of the axis along the ground, m.
    pub center_x: f64,
}

impl Default for HalfCylinderObstacle {
    fn default() -> Self {
        Self {
            radius: 0.27,
            center_x: 0.0,
        }
    }
}

impl HalfCylinderObstacle {
    pub fn flat_ground() -> Self {
        Self {
            radius: f64::INFINITY,
            center_x: 0.0,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.radius.is_infinite()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::invalid("radius", format!("must be > 0, got {}", self.radius)));
        }
        if !self.center_x.is_finite() {
            return Err(Error::invalid("center_x", "must be finite"));
        }
        Ok(())
    }
}

/// Joint positions of the planar chain: `n_segments + 1` points. A positive
/// pitch angle bends the chain downward (clockwise in the x-z plane).
pub fn forward_kinematics_sagittal(pitch_angles: &[f64], spec: &RobotSpec) -> Result<Vec<Point>> {
    forward_kinematics_from(SagittalPose::default(), pitch_angles, spec)
}

pub fn forward_kinematics_from(base: SagittalPose, pitch_angles: &[f64], spec: &RobotSpec) -> Result<Vec<Point>> {
    spec.validate()?;
    if pitch_angles.len() != spec.n_joints() {
        return Err(Error::invalid(
            "pitch_angles",
            format!("expected {} angles, got {}", spec.n_joints(), pitch_angles.len()),
        ));
    }
    let mut points = Vec::with_capacity(spec.n_segments + 1);
    let mut p = Point { x: base.x, z: base.z };
    let mut heading = base.heading;
    points.push(p);
    for k in 0..spec.n_segments {
        if k > 0 {
            heading -= pitch_angles[k - 1];
        }
        p = Point {
            x: p.x + spec.segment_length * heading.cos(),
            z: p.z + spec.segment_length * heading.sin(),
        };
        points.push(p);
    }
    Ok(points)
}

/// Sum of the distances between consecutive points.
pub fn chain_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// Signed distance of each point to the ground plane or the cylinder,
/// whichever is closer. Negative means penetration.
pub fn obstacle_clearance(positions: &[Point], obstacle: &HalfCylinderObstacle) -> Vec<f64> {
    positions
        .iter()
        .map(|p| {
            if obstacle.is_flat() {
                p.z
            } else {
                let to_surface = (p.x - obstacle.center_x).hypot(p.z) - obstacle.radius;
                p.z.min(to_surface)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_chain_spans_body_length() {
        let spec = RobotSpec::default();
        let pts = forward_kinematics_sagittal(&[0.0; 11], &spec).unwrap();
        assert_eq!(pts.len(), 13);
        assert!((pts[12].x - 0.96).abs() < 1e-12);
        assert!(pts.iter().all(|p| p.z == 0.0));
    }

    #[test]
    fn constant_bend_lies_on_circle() {
        let spec = RobotSpec::default();
        let alpha = 0.2;
        let pts = forward_kinematics_sagittal(&[alpha; 11], &spec).unwrap();
        let r = spec.segment_length / (2.0 * (alpha / 2.0).sin());
        // the circumcentre of the first three points is the arc centre
        let (a, b, c) = (pts[0], pts[1], pts[2]);
        let d = 2.0 * (a.x * (b.z - c.z) + b.x * (c.z - a.z) + c.x * (a.z - b.z));
        let sq = |p: Point| p.x * p.x + p.z * p.z;
        let centre = Point {
            x: (sq(a) * (b.z - c.z) + sq(b) * (c.z - a.z) + sq(c) * (a.z - b.z)) / d,
            z: (sq(a) * (c.x - b.x) + sq(b) * (a.x - c.x) + sq(c) * (b.x - a.x)) / d,
        };
        for p in &pts {
            assert!((p.distance(&centre) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_angle_count_rejected() {
        assert!(forward_kinematics_sagittal(&[0.0; 3], &RobotSpec::default()).is_err());
    }

    #[test]
    fn clearance_definitions() {
        let ob = HalfCylinderObstacle::default();
        let c = obstacle_clearance(&[Point { x: 0.0, z: 0.28 }, Point { x: 2.0, z: 0.0 }], &ob);
        assert!((c[0] - 0.01).abs() < 1e-12);
        assert_eq!(c[1], 0.0);
        let inside = obstacle_clearance(&[Point { x: 0.0, z: 0.2 }], &ob);
        assert!(inside[0] < 0.0);
    }
}
