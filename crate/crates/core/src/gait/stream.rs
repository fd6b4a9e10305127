use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::shape::GaitKeyframe;
use crate::error::{Error, Result};
use crate::fsio;

/// Commanded bending speed of the traversal gait, rad/s.
pub const DEFAULT_SPEED: f64 = 0.034;
/// Controller loop rate, Hz.
pub const DEFAULT_RATE: f64 = 50.0;

/// Angle vector reached after each shift, with the time it is reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftStep {
    pub time: f64,
    pub angles: Vec<f64>,
}

/// Sequence of shifted shapes. Joints are numbered from the head. Step
/// `s + 1` moves every value one joint toward the tail and the head joint
/// straightens (flat ground ahead); the value leaving the tail is dropped.
/// A step lasts as long as its largest angle change takes at `speed`; steps
/// that change nothing are skipped.
pub fn shift_schedule(shape: &GaitKeyframe, speed: f64) -> Result<Vec<ShiftStep>> {
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(Error::invalid("speed", format!("must be > 0, got {speed}")));
    }
    let mut steps = vec![ShiftStep {
        time: 0.0,
        angles: shape.angles.clone(),
    }];
    let mut current = shape.angles.clone();
    let mut time = 0.0;
    for _ in 0..shape.angles.len() {
        let mut next = vec![0.0; current.len()];
        next[1..].copy_from_slice(&current[..current.len() - 1]);
        let change = current
            .iter()
            .zip(&next)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if change > 0.0 {
            time += change / speed;
            steps.push(ShiftStep {
                time,
                angles: next.clone(),
            });
        }
        current = next;
    }
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCommandStream {
    /// Hz
    pub rate: f64,
    /// Joint targets at `i / rate`, rad.
    pub ticks: Vec<Vec<f64>>,
}

impl JointCommandStream {
    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.rate
    }

    /// `time_s,j1_rad,...,jN_rad`.
    pub fn to_csv_string(&self, n_joints: usize) -> String {
        let mut out = String::from("time_s");
        for j in 1..=n_joints {
            write!(out, ",j{j}_rad").expect("writing to a String");
        }
        out.push('\n');
        for (i, tick) in self.ticks.iter().enumerate() {
            write!(out, "{}", self.time(i)).expect("writing to a String");
            for a in tick {
                write!(out, ",{a}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path, n_joints: usize) -> Result<()> {
        fsio::write_atomic(path, self.to_csv_string(n_joints).as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut times = Vec::new();
        let mut ticks = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::TraceFormat(format!("{}: {e}", path.display())))?;
            times.push(row[0]);
            ticks.push(row[1..].to_vec());
        }
        let rate = if times.len() >= 2 {
            (times.len() - 1) as f64 / (times[times.len() - 1] - times[0])
        } else {
            DEFAULT_RATE
        };
        Ok(Self { rate, ticks })
    }
}

/// Total time of the shift sequence, s.
pub fn gait_duration(shape: &GaitKeyframe, speed: f64) -> Result<f64> {
    Ok(shift_schedule(shape, speed)?.last().map_or(0.0, |s| s.time))
}

/// Samples the shift sequence at `rate` Hz for `duration` seconds, linearly
/// interpolating between shifts and holding the final shape afterwards.
pub fn interpolate_gait(shape: &GaitKeyframe, speed: f64, rate: f64, duration: f64) -> Result<JointCommandStream> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::invalid("rate", format!("must be > 0, got {rate}")));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::invalid("duration", format!("must be >= 0, got {duration}")));
    }
    let steps = shift_schedule(shape, speed)?;
    let shortest = steps
        .windows(2)
        .map(|w| w[1].time - w[0].time)
        .fold(f64::INFINITY, f64::min);
    if shortest.is_finite() {
        let frequency = 1.0 / shortest;
        if rate < 2.0 * frequency {
            return Err(Error::RateTooLow { rate, frequency });
        }
    }
    let n_ticks = (duration * rate).round() as usize;
    let mut ticks = Vec::with_capacity(n_ticks);
    let mut seg = 0;
    for i in 0..n_ticks {
        let t = i as f64 / rate;
        while seg + 1 < steps.len() && steps[seg + 1].time <= t {
            seg += 1;
        }
        let tick = if seg + 1 == steps.len() {
            steps[seg].angles.clone()
        } else {
            let (a, b) = (&steps[seg], &steps[seg + 1]);
            let w = (t - a.time) / (b.time - a.time);
            a.angles.iter().zip(&b.angles).map(|(x, y)| x + w * (y - x)).collect()
        };
        ticks.push(tick);
    }
    Ok(JointCommandStream { rate, ticks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(angles: Vec<f64>) -> GaitKeyframe {
        GaitKeyframe {
            label: "t".into(),
            angles,
        }
    }

    #[test]
    fn single_transition_timing() {
        // the head value moves to joint 2 (0 -> 0.17) while joint 1 relaxes
        let steps = shift_schedule(&frame(vec![0.17, 0.0]), 0.034).unwrap();
        assert_eq!(steps.len(), 3);
        assert!((steps[1].time - 5.0).abs() < 1e-12);
        assert_eq!(steps[1].angles, vec![0.0, 0.17]);
        // then the tail value falls off
        assert!((steps[2].time - 10.0).abs() < 1e-12);
        assert_eq!(steps[2].angles, vec![0.0, 0.0]);
    }

    #[test]
    fn tick_spacing_and_rate_bound() {
        let shape = frame(vec![0.3, -0.1, 0.2, 0.0, 0.25]);
        let dur = gait_duration(&shape, 0.034).unwrap();
        let s = interpolate_gait(&shape, 0.034, 50.0, dur).unwrap();
        assert!((s.time(1) - 0.02).abs() < 1e-15);
        for w in s.ticks.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!((a - b).abs() <= 0.034 / 50.0 + 1e-12);
            }
        }
    }

    #[test]
    fn zero_duration_is_empty() {
        let s = interpolate_gait(&frame(vec![0.1, 0.2]), 0.034, 50.0, 0.0).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn aliasing_guard() {
        let err = interpolate_gait(&frame(vec![0.17, 0.0]), 0.034, 0.1, 10.0).unwrap_err();
        assert!(matches!(err, Error::RateTooLow { .. }));
    }

    #[test]
    fn shift_is_pure() {
        let steps = shift_schedule(&frame(vec![0.1, 0.2, 0.3, 0.4]), 0.034).unwrap();
        assert_eq!(steps.len(), 5);
        for w in steps.windows(2) {
            assert_eq!(w[1].angles[1..], w[0].angles[..3]);
            assert_eq!(w[1].angles[0], 0.0);
        }
        assert!(steps[4].angles.iter().all(|&a| a == 0.0));
    }
}
