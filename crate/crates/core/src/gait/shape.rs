use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::kinematics::{HalfCylinderObstacle, Point, RobotSpec, SagittalPose};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitKeyframe {
    pub label: String,
    /// One pitch angle per joint, rad.
    pub angles: Vec<f64>,
}

impl GaitKeyframe {
    pub fn validate(&self, spec: &RobotSpec) -> Result<()> {
        if self.angles.len() != spec.n_joints() {
            return Err(Error::invalid(
                "angles",
                format!(
                    "keyframe `{}` has {} angles, robot has {} joints",
                    self.label,
                    self.angles.len(),
                    spec.n_joints()
                ),
            ));
        }
        if let Some((i, a)) = self
            .angles
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.abs() <= spec.joint_limit))
        {
            return Err(Error::invalid(
                "angles",
                format!(
                    "joint {} angle {a} rad exceeds the limit {} rad",
                    i + 1,
                    spec.joint_limit
                ),
            ));
        }
        Ok(())
    }
}

/// Keyframe plus the base pose that places the chain on the obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformingShape {
    pub keyframe: GaitKeyframe,
    pub base: SagittalPose,
}

/// Exterior angle between consecutive chords of length `segment_length`
/// inscribed in a circle of `radius`.
pub fn chord_angle(radius: f64, segment_length: f64) -> f64 {
    2.0 * (segment_length / (2.0 * radius)).asin()
}

/// Drapes the body over the obstacle. Joints sit on the arc, the middle one
/// at the apex, with consecutive joints one chord apart. Each side follows
/// the arc until a segment can reach the ground outside the cylinder, then
/// lies flat.
pub fn conforming_shape(obstacle: &HalfCylinderObstacle, spec: &RobotSpec) -> Result<ConformingShape> {
    spec.validate()?;
    let n = spec.n_segments;
    let l = spec.segment_length;
    if obstacle.is_flat() {
        return Ok(ConformingShape {
            keyframe: GaitKeyframe {
                label: "flat".into(),
                angles: vec![0.0; spec.n_joints()],
            },
            base: SagittalPose::default(),
        });
    }
    obstacle.validate()?;
    let r = obstacle.radius;
    if r < l / 2.0 {
        return Err(Error::ObstacleTooSharp {
            radius: r,
            half_segment: l / 2.0,
        });
    }
    let beta = chord_angle(r, l);
    let apex = n as f64 / 2.0;
    let on_arc = |dir: f64, psi: f64| Point {
        x: obstacle.center_x + dir * r * psi.sin(),
        z: r * psi.cos(),
    };

    // one side, walking away from the apex; `dir` is +1 (toward +x) or -1
    let walk = |dir: f64, first_psi: f64, count: usize| -> Vec<Point> {
        let mut pts = Vec::with_capacity(count);
        let mut psi = first_psi;
        let mut p = on_arc(dir, psi);
        let mut landed = false;
        pts.push(p);
        while pts.len() < count {
            if landed {
                p = Point {
                    x: p.x + dir * l,
                    z: 0.0,
                };
            } else {
                let next_psi = psi + beta;
                let reach = (l * l - p.z * p.z).max(0.0).sqrt();
                let land = Point {
                    x: p.x + dir * reach,
                    z: 0.0,
                };
                let outside = dir * (land.x - obstacle.center_x) >= r;
                // the landing segment must leave the surface outward
                let normal = (dir * psi.sin(), psi.cos());
                let outward = normal.0 * dir * reach - normal.1 * p.z >= 0.0;
                if p.z <= l && outside && (outward || next_psi > FRAC_PI_2) {
                    p = land;
                    landed = true;
                } else {
                    psi = next_psi;
                    p = on_arc(dir, psi);
                }
            }
            pts.push(p);
        }
        pts
    };

    // vertex i sits at arc angle (i - n/2) * beta before landing
    let right_first = (apex.ceil() - apex) * beta;
    let right_count = n + 1 - apex.ceil() as usize;
    let left_count = apex.floor() as usize + 1;
    let left_first = (apex - apex.floor()) * beta;
    let right = walk(1.0, right_first, right_count);
    let left = walk(-1.0, left_first, left_count);

    let mut points: Vec<Point> = left.into_iter().rev().collect();
    if apex.fract() == 0.0 {
        points.pop();
    }
    points.extend(right);
    debug_assert_eq!(points.len(), n + 1);

    let headings: Vec<f64> = points
        .windows(2)
        .map(|w| (w[1].z - w[0].z).atan2(w[1].x - w[0].x))
        .collect();
    let angles: Vec<f64> = headings.windows(2).map(|h| h[0] - h[1]).collect();
    let keyframe = GaitKeyframe {
        label: format!("conform_r{r}"),
        angles,
    };
    keyframe.validate(spec)?;
    Ok(ConformingShape {
        keyframe,
        base: SagittalPose {
            x: points[0].x,
            z: points[0].z,
            heading: headings[0],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::kinematics::{forward_kinematics_from, obstacle_clearance};
    use super::*;

    #[test]
    fn default_obstacle_chord_angle() {
        let shape = conforming_shape(&HalfCylinderObstacle::default(), &RobotSpec::default()).unwrap();
        let beta = chord_angle(0.27, 0.08);
        assert!((beta - 0.297).abs() < 5e-4);
        // joints 5..7 straddle the apex and are on the arc
        for j in 4..7 {
            assert!(
                (shape.keyframe.angles[j] - beta).abs() < 1e-12,
                "{:?}",
                shape.keyframe.angles
            );
        }
    }

    #[test]
    fn conforming_chain_does_not_penetrate() {
        let spec = RobotSpec::default();
        for r in [0.05, 0.1, 0.27, 0.5, 1.0, 3.0] {
            let ob = HalfCylinderObstacle {
                radius: r,
                center_x: 0.3,
            };
            let shape = conforming_shape(&ob, &spec).unwrap();
            let pts = forward_kinematics_from(shape.base, &shape.keyframe.angles, &spec).unwrap();
            let min = obstacle_clearance(&pts, &ob).into_iter().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-9, "r={r} min clearance {min}");
        }
    }

    #[test]
    fn flat_ground_and_sharp_obstacles() {
        let spec = RobotSpec::default();
        let flat = conforming_shape(&HalfCylinderObstacle::flat_ground(), &spec).unwrap();
        assert!(flat.keyframe.angles.iter().all(|&a| a == 0.0));
        let sharp = HalfCylinderObstacle {
            radius: 0.03,
            center_x: 0.0,
        };
        assert!(matches!(
            conforming_shape(&sharp, &spec),
            Err(Error::ObstacleTooSharp { .. })
        ));
    }
}
