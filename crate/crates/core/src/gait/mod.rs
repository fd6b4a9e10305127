//! Follow-the-leader vertical bending and planar (sagittal) kinematics.
//!
//! Every joint is treated as a pitch joint in the sagittal model. Joints and
//! chain points are numbered from the head. A shape is propagated toward the
//! tail one joint at a time, with linear interpolation in time between
//! successive assignments.

mod kinematics;
mod shape;
mod stream;

pub use kinematics::{
    chain_length, forward_kinematics_from, forward_kinematics_sagittal, obstacle_clearance, HalfCylinderObstacle,
    Point, RobotSpec, SagittalPose,
};
pub use shape::{chord_angle, conforming_shape, ConformingShape, GaitKeyframe};
pub use stream::{
    gait_duration, interpolate_gait, shift_schedule, JointCommandStream, ShiftStep, DEFAULT_RATE, DEFAULT_SPEED,
};
