//! Multiplexed array acquisition: layout, frame timing, scan schedules and a
//! staggered-sampling emulator.
//!
//! One DAQ visits its sensors one at a time. A frame costs a fixed overhead
//! plus a dwell per visited sensor; with several DAQs the sensors are dealt
//! round-robin and scanned concurrently, at the price of a multiplicative
//! penalty on the overhead.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;
use crate::trace::{Trace, Unit};

/// Sensor footprint on the robot, m.
pub const SENSOR_LENGTH: f64 = 0.04;
pub const SENSOR_WIDTH: f64 = 0.035;
pub const V2_SEGMENTS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::Left, Side::Right, Side::Bottom];

    pub fn letter(self) -> char {
        match self {
            Side::Left => 'L',
            Side::Right => 'R',
            Side::Bottom => 'B',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorPlacement {
    pub id: String,
    pub segment: u32,
    pub side: Side,
    pub length: f64,
    pub width: f64,
}

impl SensorPlacement {
    pub fn area(&self) -> f64 {
        self.length * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub sensors: Vec<SensorPlacement>,
}

impl Default for ArrayLayout {
    fn default() -> Self {
        Self::v2()
    }
}

impl ArrayLayout {
    /// 12 segments with a left, right and bottom sensor each.
    pub fn v2() -> Self {
        let sensors = (1..=V2_SEGMENTS)
            .flat_map(|segment| {
                Side::ALL.into_iter().map(move |side| SensorPlacement {
                    id: format!("{segment}{}", side.letter()),
                    segment,
                    side,
                    length: SENSOR_LENGTH,
                    width: SENSOR_WIDTH,
                })
            })
            .collect();
        Self { sensors }
    }

    /// `n` sensors filled three per segment, for sweeps beyond the robot size.
    pub fn uniform(n: usize) -> Self {
        let sensors = (0..n)
            .map(|i| {
                let segment = (i / 3) as u32 + 1;
                let side = Side::ALL[i % 3];
                SensorPlacement {
                    id: format!("{segment}{}", side.letter()),
                    segment,
                    side,
                    length: SENSOR_LENGTH,
                    width: SENSOR_WIDTH,
                }
            })
            .collect();
        Self { sensors }
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::invalid("sensors", "layout has no sensors"));
        }
        let mut seen = HashSet::new();
        for s in &self.sensors {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::invalid("sensors", format!("duplicate sensor id `{}`", s.id)));
            }
            if s.segment == 0 {
                return Err(Error::invalid(
                    "segment",
                    format!("sensor `{}`: segments are numbered from 1", s.id),
                ));
            }
            if !(s.length > 0.0 && s.width > 0.0) {
                return Err(Error::invalid(
                    "geometry",
                    format!("sensor `{}` has non-positive size", s.id),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanTiming {
    /// Per-frame overhead, s.
    pub t_fixed: f64,
    /// Dwell per visited sensor, s.
    pub t_per_sensor: f64,
    pub n_daq: usize,
    /// Factor on the overhead when more than one DAQ is used.
    pub daq_penalty: f64,
}

impl Default for ScanTiming {
    /// Fitted to 20 Hz at one sensor and 10 Hz at 300 sensors.
    fn default() -> Self {
        Self {
            t_fixed: 0.05,
            t_per_sensor: 1.67e-4,
            n_daq: 1,
            daq_penalty: 1.1,
        }
    }
}

impl ScanTiming {
    /// Timing of the 36-sensor robot firmware, which reaches 30 Hz.
    pub fn v2() -> Self {
        Self {
            t_fixed: 0.027,
            ..Self::default()
        }
    }

    pub fn with_daqs(self, n_daq: usize) -> Self {
        Self { n_daq, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_fixed > 0.0) {
            return Err(Error::invalid("t_fixed", format!("must be > 0, got {}", self.t_fixed)));
        }
        if !(self.t_per_sensor > 0.0) {
            return Err(Error::invalid(
                "t_per_sensor",
                format!("must be > 0, got {}", self.t_per_sensor),
            ));
        }
        if self.n_daq == 0 {
            return Err(Error::invalid("n_daq", "need at least one DAQ"));
        }
        if !(self.daq_penalty >= 1.0) {
            return Err(Error::invalid(
                "daq_penalty",
                format!("must be >= 1, got {}", self.daq_penalty),
            ));
        }
        Ok(())
    }

    fn overhead(&self) -> f64 {
        if self.n_daq > 1 {
            self.t_fixed * self.daq_penalty
        } else {
            self.t_fixed
        }
    }

    /// Sensors visited by the busiest DAQ.
    pub fn visits_per_daq(&self, n_sensors: usize) -> usize {
        n_sensors.div_ceil(self.n_daq.max(1))
    }

    pub fn frame_time(&self, n_sensors: usize) -> f64 {
        self.overhead() + self.visits_per_daq(n_sensors) as f64 * self.t_per_sensor
    }
}

/// Frame rate, Hz.
pub fn sampling_frequency(n_sensors: usize, timing: &ScanTiming) -> f64 {
    1.0 / timing.frame_time(n_sensors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanVisit {
    /// Index into the layout.
    pub sensor: usize,
    pub id: String,
    pub daq: usize,
    /// Time of the visit from the start of the frame, s.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSchedule {
    /// Ordered by offset, then DAQ.
    pub visits: Vec<ScanVisit>,
    pub frame_period: f64,
    pub n_daq: usize,
}

impl ScanSchedule {
    pub fn frame_rate(&self) -> f64 {
        1.0 / self.frame_period
    }

    pub fn visits_on(&self, daq: usize) -> impl Iterator<Item = &ScanVisit> + '_ {
        self.visits.iter().filter(move |v| v.daq == daq)
    }
}

/// Sensor `i` goes to DAQ `i % n_daq` in slot `i / n_daq`; each DAQ visits its
/// slots back to back from the start of the frame.
pub fn build_scan_schedule(layout: &ArrayLayout, timing: &ScanTiming) -> Result<ScanSchedule> {
    layout.validate()?;
    timing.validate()?;
    let n_daq = timing.n_daq;
    let mut visits: Vec<ScanVisit> = layout
        .sensors
        .iter()
        .enumerate()
        .map(|(i, s)| ScanVisit {
            sensor: i,
            id: s.id.clone(),
            daq: i % n_daq,
            offset: (i / n_daq) as f64 * timing.t_per_sensor,
        })
        .collect();
    visits.sort_by(|a, b| a.offset.total_cmp(&b.offset).then(a.daq.cmp(&b.daq)));
    Ok(ScanSchedule {
        visits,
        frame_period: timing.frame_time(layout.len()),
        n_daq,
    })
}

/// Idealised additive-conductance leak from the sensor scanned just before on
/// the same DAQ. Not part of the reference electronics, which suppress
/// crosstalk; off unless requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crosstalk {
    pub leak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScannedSensor {
    pub id: String,
    pub phase_offset: f64,
    pub trace: Trace,
}

/// Samples each ground-truth resistance function at its staggered instants
/// over `duration` seconds. `ground_truth[i]` belongs to layout sensor `i`.
pub fn scan_array<F>(
    ground_truth: &[F],
    schedule: &ScanSchedule,
    duration: f64,
    crosstalk: Option<Crosstalk>,
) -> Result<Vec<ScannedSensor>>
where
    F: Fn(f64) -> f64,
{
    if !(duration > 0.0) {
        return Err(Error::invalid("duration", format!("must be > 0, got {duration}")));
    }
    if ground_truth.len() != schedule.visits.len() {
        return Err(Error::invalid(
            "ground_truth",
            format!(
                "{} functions for {} scheduled sensors",
                ground_truth.len(),
                schedule.visits.len()
            ),
        ));
    }
    if let Some(c) = crosstalk {
        if !(c.leak >= 0.0) {
            return Err(Error::invalid("leak", format!("must be >= 0, got {}", c.leak)));
        }
    }
    let period = schedule.frame_period;
    let frames = ((duration / period).floor() as usize).max(1);

    // previous visit on the same DAQ, by schedule position
    let mut previous = vec![None; schedule.visits.len()];
    let mut last_on_daq = vec![None; schedule.n_daq];
    for (pos, v) in schedule.visits.iter().enumerate() {
        previous[pos] = last_on_daq[v.daq];
        last_on_daq[v.daq] = Some(pos);
    }

    let mut out: Vec<Option<ScannedSensor>> = vec![None; schedule.visits.len()];
    for (pos, v) in schedule.visits.iter().enumerate() {
        let values = (0..frames)
            .map(|k| {
                let t = k as f64 * period + v.offset;
                let r = ground_truth[v.sensor](t);
                match (crosstalk, previous[pos]) {
                    (Some(c), Some(p)) => {
                        let pv = &schedule.visits[p];
                        let r_prev = ground_truth[pv.sensor](k as f64 * period + pv.offset);
                        1.0 / (1.0 / r + c.leak / r_prev)
                    }
                    _ => r,
                }
            })
            .collect();
        out[v.sensor] = Some(ScannedSensor {
            id: v.id.clone(),
            phase_offset: v.offset,
            trace: Trace::new(v.offset, period, values, Unit::Resistance)?,
        });
    }
    Ok(out
        .into_iter()
        .map(|s| s.expect("every sensor is scheduled once"))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanIndexEntry {
    pub id: String,
    pub file: PathBuf,
    pub phase_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanIndex {
    pub frame_period: f64,
    pub sensors: Vec<ScanIndexEntry>,
}

pub const SCAN_INDEX_FILE: &str = "index.json";

/// One `time_s,value` CSV per sensor plus `index.json`.
pub fn write_scan(dir: &Path, frame_period: f64, scanned: &[ScannedSensor]) -> Result<ScanIndex> {
    let mut sensors = Vec::with_capacity(scanned.len());
    for s in scanned {
        let file = PathBuf::from(format!("{}.csv", s.id));
        s.trace.write_csv(&dir.join(&file))?;
        sensors.push(ScanIndexEntry {
            id: s.id.clone(),
            file,
            phase_offset: s.phase_offset,
        });
    }
    let index = ScanIndex { frame_period, sensors };
    fsio::write_json(&dir.join(SCAN_INDEX_FILE), &index)?;
    Ok(index)
}

pub fn read_scan(dir: &Path) -> Result<Vec<ScannedSensor>> {
    let index: ScanIndex = fsio::read_json(&dir.join(SCAN_INDEX_FILE))?;
    index
        .sensors
        .into_iter()
        .map(|e| {
            let trace = Trace::read_csv(&dir.join(&e.file), Unit::Resistance)?;
            Ok(ScannedSensor {
                id: e.id,
                phase_offset: e.phase_offset,
                trace,
            })
        })
        .collect()
}
