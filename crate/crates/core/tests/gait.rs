use proptest::prelude::*;

use snakesense::gait::{
    chain_length, chord_angle, conforming_shape, forward_kinematics_from, forward_kinematics_sagittal, gait_duration,
    interpolate_gait, obstacle_clearance, shift_schedule, GaitKeyframe, HalfCylinderObstacle, JointCommandStream,
    RobotSpec, SagittalPose, DEFAULT_RATE, DEFAULT_SPEED,
};
use snakesense::Error;

fn cylinder(radius: f64) -> HalfCylinderObstacle {
    HalfCylinderObstacle { radius, center_x: 0.0 }
}

fn frame(angles: Vec<f64>) -> GaitKeyframe {
    GaitKeyframe {
        label: "test".into(),
        angles,
    }
}

#[test]
fn default_obstacle_shape() {
    let spec = RobotSpec::default();
    let shape = conforming_shape(&cylinder(0.27), &spec).unwrap();
    let a = &shape.keyframe.angles;
    assert_eq!(a.len(), 11);
    let beta = chord_angle(0.27, 0.08);
    assert!((beta - 0.297_39).abs() < 1e-5);
    for &x in &a[1..10] {
        assert!((x - beta).abs() < 1e-12);
    }
    // the end joints bend back so the head and tail lie on the ground
    assert!(a[0] < 0.0 && a[10] < 0.0);
    let pts = forward_kinematics_from(shape.base, a, &spec).unwrap();
    assert!(pts[0].z.abs() < 1e-12 && pts[12].z.abs() < 1e-12);
    assert!(pts[0].x < -0.27 && pts[12].x > 0.27);
}

#[test]
fn shape_is_mirror_symmetric() {
    let spec = RobotSpec::default();
    for r in [0.1, 0.27, 0.6] {
        let a = conforming_shape(&cylinder(r), &spec).unwrap().keyframe.angles;
        for i in 0..a.len() {
            assert!((a[i] - a[a.len() - 1 - i]).abs() < 1e-12, "r {r}, joint {i}");
        }
    }
}

#[test]
fn shape_never_penetrates_or_exceeds_limits() {
    let spec = RobotSpec::default();
    for r in [0.04, 0.05, 0.08, 0.15, 0.27, 0.4, 1.0, 5.0] {
        let shape = conforming_shape(&cylinder(r), &spec).unwrap();
        let pts = forward_kinematics_from(shape.base, &shape.keyframe.angles, &spec).unwrap();
        let min = obstacle_clearance(&pts, &cylinder(r))
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9, "r {r}: {min}");
        assert!(shape.keyframe.angles.iter().all(|a| a.abs() <= spec.joint_limit));
    }
}

#[test]
fn flat_ground_and_sharp_edges() {
    let spec = RobotSpec::default();
    let flat = conforming_shape(&HalfCylinderObstacle::flat_ground(), &spec).unwrap();
    assert!(flat.keyframe.angles.iter().all(|&a| a == 0.0));
    assert!(matches!(
        conforming_shape(&cylinder(0.03), &spec),
        Err(Error::ObstacleTooSharp { .. })
    ));
}

#[test]
fn stream_starts_at_the_shape_and_ends_straight() {
    let spec = RobotSpec::default();
    let shape = conforming_shape(&cylinder(0.27), &spec).unwrap().keyframe;
    let total = gait_duration(&shape, DEFAULT_SPEED).unwrap();
    let stream = interpolate_gait(&shape, DEFAULT_SPEED, DEFAULT_RATE, total + 1.0).unwrap();
    assert_eq!(stream.ticks[0], shape.angles);
    assert!(stream.ticks.last().unwrap().iter().all(|&a| a == 0.0));
    assert_eq!(stream.len(), ((total + 1.0) * DEFAULT_RATE).round() as usize);
}

#[test]
fn stream_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("commands.csv");
    let shape = frame(vec![0.2, -0.1, 0.3]);
    let stream = interpolate_gait(&shape, DEFAULT_SPEED, DEFAULT_RATE, 4.0).unwrap();
    stream.write_csv(&path, 3).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("time_s,j1_rad,j2_rad,j3_rad\n"));
    let back = JointCommandStream::read_csv(&path).unwrap();
    assert_eq!(back.ticks, stream.ticks);
    assert!((back.rate - DEFAULT_RATE).abs() < 1e-9);
}

#[test]
fn invalid_stream_arguments() {
    let shape = frame(vec![0.2, 0.1]);
    assert!(interpolate_gait(&shape, 0.0, 50.0, 1.0).is_err());
    assert!(interpolate_gait(&shape, DEFAULT_SPEED, -1.0, 1.0).is_err());
    assert!(interpolate_gait(&shape, DEFAULT_SPEED, 50.0, f64::NAN).is_err());
    assert!(matches!(
        interpolate_gait(&shape, 10.0, 50.0, 1.0),
        Err(Error::RateTooLow { .. })
    ));
}

fn angles(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, n)
}

proptest! {
    #[test]
    fn kinematics_preserves_segment_lengths(a in angles(11), x in -1.0f64..1.0, z in -1.0f64..1.0, h in -3.0f64..3.0) {
        let spec = RobotSpec::default();
        let pts = forward_kinematics_from(SagittalPose { x, z, heading: h }, &a, &spec).unwrap();
        prop_assert!((chain_length(&pts) - spec.body_length()).abs() <= 1e-12);
        for w in pts.windows(2) {
            prop_assert!((w[0].distance(&w[1]) - spec.segment_length).abs() <= 1e-15);
        }
    }

    #[test]
    fn kinematics_is_rigid_in_the_base_pose(a in angles(11), h in -3.0f64..3.0) {
        let spec = RobotSpec::default();
        let local = forward_kinematics_sagittal(&a, &spec).unwrap();
        let moved = forward_kinematics_from(SagittalPose { x: 0.3, z: -0.2, heading: h }, &a, &spec).unwrap();
        let (s, c) = h.sin_cos();
        for (p, q) in local.iter().zip(&moved) {
            prop_assert!((0.3 + c * p.x - s * p.z - q.x).abs() < 1e-12);
            prop_assert!((-0.2 + s * p.x + c * p.z - q.z).abs() < 1e-12);
        }
    }

    #[test]
    fn shifts_move_values_toward_the_tail(a in angles(8)) {
        let steps = shift_schedule(&frame(a.clone()), DEFAULT_SPEED).unwrap();
        prop_assert_eq!(&steps[0].angles, &a);
        for w in steps.windows(2) {
            prop_assert!(w[1].time > w[0].time);
            prop_assert_eq!(w[1].angles[0], 0.0);
        }
        // every shape is the original pushed k joints toward the tail
        let n = a.len();
        for s in &steps {
            let shifted = (0..=n).any(|k| s.angles[..k].iter().all(|&x| x == 0.0) && s.angles[k..] == a[..n - k]);
            prop_assert!(shifted, "{:?}", s.angles);
        }
        prop_assert!(steps.last().unwrap().angles.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn commands_respect_the_rate_bound(a in angles(6), speed in 0.01f64..0.2) {
        let shape = frame(a);
        let total = gait_duration(&shape, speed).unwrap();
        let rate = 50.0;
        match interpolate_gait(&shape, speed, rate, total) {
            Ok(stream) => {
                for w in stream.ticks.windows(2) {
                    for (x, y) in w[0].iter().zip(&w[1]) {
                        prop_assert!((x - y).abs() <= speed / rate * (1.0 + 1e-9));
                    }
                }
            }
            Err(Error::RateTooLow { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
