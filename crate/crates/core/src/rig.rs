//! Virtual calibration rig: a spring presses a probe onto one sensor with a
//! constant force while the resistance is logged.
//!
//! Non-flat probes may change their contact patch during a trial. This is
//! modelled as a linear shrink of the active area whose magnitude is drawn
//! per trial, since a real contact settles differently every time.

use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::daq::{SENSOR_LENGTH, SENSOR_WIDTH};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fsio;
use crate::trace::{Trace, Unit};
use crate::viscoelastic::{forward_simulate_detailed, ForceLinearParams, MaterialConstants, ParamModel, PiezoModel};

pub const SENSOR_AREA: f64 = SENSOR_LENGTH * SENSOR_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    LargeFlat,
    SmallFlat,
    SharpEdge,
    MultiPoint,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 4] = [
        ProbeKind::LargeFlat,
        ProbeKind::SmallFlat,
        ProbeKind::SharpEdge,
        ProbeKind::MultiPoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::LargeFlat => "large_flat",
            ProbeKind::SmallFlat => "small_flat",
            ProbeKind::SharpEdge => "sharp_edge",
            ProbeKind::MultiPoint => "multi_point",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProbeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid("probe", format!("unknown probe kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    /// m²
    pub active_area: f64,
    /// Scale of the fractional area loss over a trial. Each trial shrinks the
    /// area by `area_drift * u` with `u` uniform in [0, 2).
    #[serde(default)]
    pub area_drift: f64,
}

impl ProbeSpec {
    /// Large flat covers the sensor; the others are fractions of it (small
    /// flat 25 %, sharp edge 5 %, multi-point four contacts of 2 %) with 20 %
    /// drift.
    pub fn default_for(kind: ProbeKind) -> Self {
        let (fraction, area_drift) = match kind {
            ProbeKind::LargeFlat => (1.0, 0.0),
            ProbeKind::SmallFlat => (0.25, 0.2),
            ProbeKind::SharpEdge => (0.05, 0.2),
            ProbeKind::MultiPoint => (4.0 * 0.02, 0.2),
        };
        Self {
            kind,
            active_area: fraction * SENSOR_AREA,
            area_drift,
        }
    }

    pub fn all_defaults() -> Vec<Self> {
        ProbeKind::ALL.into_iter().map(Self::default_for).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.active_area > 0.0 && self.active_area <= SENSOR_AREA * (1.0 + 1e-12)) {
            return Err(Error::invalid(
                "active_area",
                format!("must be in (0, {SENSOR_AREA}] m², got {}", self.active_area),
            ));
        }
        if !(0.0..0.5).contains(&self.area_drift) {
            return Err(Error::invalid(
                "area_drift",
                format!("must be in [0, 0.5), got {}", self.area_drift),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProtocol {
    /// N
    pub force_levels: Vec<f64>,
    pub trials_per_level: usize,
    /// s
    pub duration: f64,
    /// Hz
    pub sample_rate: f64,
    /// N/m
    pub spring_k: f64,
    /// Standard deviation of the multiplicative resistance noise.
    pub noise: f64,
    /// Time to reach the target force from rest, s.
    pub load_ramp: f64,
    /// Travel of the spring mechanism, m.
    pub spring_max_deflection: f64,
}

impl Default for CalibrationProtocol {
    fn default() -> Self {
        Self {
            force_levels: vec![1.75, 3.0, 4.0, 5.25],
            trials_per_level: 3,
            duration: 370.0,
            sample_rate: 6.0,
            spring_k: 246.0,
            noise: 0.001,
            load_ramp: 2.0,
            spring_max_deflection: 0.05,
        }
    }
}

impl CalibrationProtocol {
    pub fn n_samples(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.force_levels.iter().find(|f| !(**f > 0.0)) {
            return Err(Error::invalid("force_levels", format!("forces must be > 0, got {f}")));
        }
        if self.trials_per_level == 0 {
            return Err(Error::invalid("trials_per_level", "must be at least 1"));
        }
        for (field, v) in [
            ("duration", self.duration),
            ("sample_rate", self.sample_rate),
            ("spring_k", self.spring_k),
            ("spring_max_deflection", self.spring_max_deflection),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, format!("must be > 0, got {v}")));
            }
        }
        let count = self.duration * self.sample_rate;
        if (count - count.round()).abs() > 1e-9 * count.max(1.0) || count.round() < 2.0 {
            return Err(Error::invalid(
                "duration",
                format!("duration * sample_rate must be an integer sample count >= 2, got {count}"),
            ));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::invalid("noise", format!("must be >= 0, got {}", self.noise)));
        }
        if !(self.load_ramp >= 0.0) {
            return Err(Error::invalid(
                "load_ramp",
                format!("must be >= 0, got {}", self.load_ramp),
            ));
        }
        Ok(())
    }
}

/// Hooke's law, N.
pub fn spring_force(deflection: f64, k: f64) -> Result<f64> {
    if !(deflection >= 0.0) {
        return Err(Error::invalid("deflection", format!("must be >= 0, got {deflection}")));
    }
    Ok(k * deflection)
}

/// Deflection that produces `force`, m.
pub fn spring_deflection(force: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::invalid("spring_k", format!("must be > 0, got {k}")));
    }
    if !(force >= 0.0) {
        return Err(Error::invalid("force", format!("must be >= 0, got {force}")));
    }
    Ok(force / k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetadata {
    pub seed: u64,
    pub noise: f64,
    pub load_ramp: f64,
    /// Realised fractional area loss at the end of the trial.
    pub area_loss: f64,
    pub spring_deflection: f64,
    pub model: PiezoModel,
    pub truth: ForceLinearParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSession {
    pub probe: ProbeSpec,
    pub target_force: f64,
    pub trial_index: usize,
    pub resistance: Trace,
    pub conductance: Trace,
    pub metadata: SessionMetadata,
}

impl CalibrationSession {
    pub fn dir_name(&self) -> String {
        session_dir_name(self.probe.kind, self.target_force, self.trial_index)
    }

    /// Force the spring applied: a linear ramp from rest to the target.
    pub fn commanded_force(&self) -> Trace {
        commanded_force(&self.resistance, self.target_force, self.metadata.load_ramp)
    }

    /// True contact area per sample, m².
    pub fn area_profile(&self) -> Vec<f64> {
        area_profile(self.probe.active_area, self.metadata.area_loss, &self.resistance)
    }
}

fn session_dir_name(kind: ProbeKind, force: f64, trial: usize) -> String {
    format!("{}_{}N_t{}", kind.name(), force, trial)
}

fn commanded_force(base: &Trace, target: f64, ramp: f64) -> Trace {
    let t0 = base.t0();
    base.with_values(
        base.times()
            .map(|t| {
                if ramp > 0.0 {
                    target * ((t - t0) / ramp).min(1.0)
                } else {
                    target
                }
            })
            .collect(),
        Unit::Force,
    )
    .expect("same length as the base trace")
}

fn area_profile(a0: f64, loss: f64, base: &Trace) -> Vec<f64> {
    let span = (base.len() as f64 - 1.0) * base.dt();
    base.times()
        .map(|t| a0 * (1.0 - loss * (t - base.t0()) / span))
        .collect()
}

/// Seed of one session, derived from the dataset seed and the session key.
pub fn session_seed(base: u64, kind: ProbeKind, force_index: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream((kind.index() << 48) | ((force_index as u64) << 24) | trial as u64);
    rng.next_u64()
}

pub fn run_calibration_trial(
    probe: &ProbeSpec,
    target_force: f64,
    trial_index: usize,
    protocol: &CalibrationProtocol,
    model: &PiezoModel,
    truth: &ForceLinearParams,
    seed: u64,
) -> Result<CalibrationSession> {
    probe.validate()?;
    protocol.validate()?;
    let deflection = spring_deflection(target_force, protocol.spring_k)?;
    if deflection > protocol.spring_max_deflection {
        return Err(Error::invalid(
            "target_force",
            format!(
                "{target_force} N needs {deflection} m of spring travel, more than {} m",
                protocol.spring_max_deflection
            ),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area_loss = probe.area_drift * rng.random_range(0.0..2.0);

    let base = Trace::new(0.0, protocol.dt(), vec![0.0; protocol.n_samples()], Unit::Force)?;
    let force = commanded_force(&base, target_force, protocol.load_ramp);
    let areas = area_profile(probe.active_area, area_loss, &base);
    let params = ParamModel::ForceLinear(*truth);
    let clean = forward_simulate_detailed(model, &params, &force, &areas)?.resistance;

    let resistance = if protocol.noise > 0.0 {
        let normal = Normal::new(0.0, protocol.noise).map_err(|e| Error::invalid("noise", e.to_string()))?;
        let noisy = clean
            .values()
            .iter()
            .map(|r| r * (1.0 + normal.sample(&mut rng)).max(1e-6))
            .collect();
        clean.with_values(noisy, Unit::Resistance)?
    } else {
        clean
    };
    let conductance = resistance.map(Unit::Conductance, |r| 1.0 / r)?;
    Ok(CalibrationSession {
        probe: *probe,
        target_force,
        trial_index,
        resistance,
        conductance,
        metadata: SessionMetadata {
            seed,
            noise: protocol.noise,
            load_ramp: protocol.load_ramp,
            area_loss,
            spring_deflection: deflection,
            model: *model,
            truth: *truth,
        },
    })
}

/// Every (probe, force, trial) combination, ordered by probe, force level and
/// trial regardless of `exec`.
pub fn run_protocol(
    protocol: &CalibrationProtocol,
    probes: &[ProbeSpec],
    model: &PiezoModel,
    truth: &ForceLinearParams,
    seed: u64,
    exec: Execution,
) -> Result<Vec<CalibrationSession>> {
    protocol.validate()?;
    let mut keys = Vec::new();
    for (p_idx, probe) in probes.iter().enumerate() {
        if probes[..p_idx].iter().any(|p| p.kind == probe.kind) {
            return Err(Error::invalid(
                "probes",
                format!("probe `{}` listed twice", probe.kind.name()),
            ));
        }
        for (f_idx, &force) in protocol.force_levels.iter().enumerate() {
            for trial in 0..protocol.trials_per_level {
                keys.push((*probe, f_idx, force, trial));
            }
        }
    }
    exec.try_map(&keys, |(probe, f_idx, force, trial)| {
        let s = session_seed(seed, probe.kind, *f_idx, *trial);
        run_calibration_trial(probe, *force, *trial, protocol, model, truth, s)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub dir: PathBuf,
    pub probe: ProbeKind,
    pub target_force: f64,
    pub trial_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub protocol: CalibrationProtocol,
    pub probes: Vec<ProbeSpec>,
    pub material: MaterialConstants,
    pub truth: ForceLinearParams,
    pub sessions: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SessionFile {
    probe: ProbeSpec,
    target_force: f64,
    trial_index: usize,
    t0: f64,
    dt: f64,
    samples: usize,
    metadata: SessionMetadata,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SESSION_FILE: &str = "session.json";
pub const RESISTANCE_FILE: &str = "resistance.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub sessions: Vec<CalibrationSession>,
}

pub fn save_dataset(
    dir: &Path,
    seed: u64,
    protocol: &CalibrationProtocol,
    probes: &[ProbeSpec],
    sessions: &[CalibrationSession],
) -> Result<DatasetManifest> {
    let mut entries = Vec::with_capacity(sessions.len());
    for s in sessions {
        let sub = PathBuf::from(s.dir_name());
        let file = SessionFile {
            probe: s.probe,
            target_force: s.target_force,
            trial_index: s.trial_index,
            t0: s.resistance.t0(),
            dt: s.resistance.dt(),
            samples: s.resistance.len(),
            metadata: s.metadata.clone(),
        };
        fsio::write_json(&dir.join(&sub).join(SESSION_FILE), &file)?;
        s.resistance.write_csv(&dir.join(&sub).join(RESISTANCE_FILE))?;
        entries.push(ManifestEntry {
            dir: sub,
            probe: s.probe.kind,
            target_force: s.target_force,
            trial_index: s.trial_index,
        });
    }
    let first = sessions.first().map(|s| &s.metadata);
    let manifest = DatasetManifest {
        seed,
        protocol: protocol.clone(),
        probes: probes.to_vec(),
        material: first.map(|m| m.model.material).unwrap_or_default(),
        truth: first.map(|m| m.truth).unwrap_or_default(),
        sessions: entries,
    };
    fsio::write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: DatasetManifest = fsio::read_json(&dir.join(MANIFEST_FILE))?;
    let sessions = manifest
        .sessions
        .iter()
        .map(|entry| load_session(&dir.join(&entry.dir)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { manifest, sessions })
}

pub fn load_session(dir: &Path) -> Result<CalibrationSession> {
    let file: SessionFile = fsio::read_json(&dir.join(SESSION_FILE))?;
    let csv_path = dir.join(RESISTANCE_FILE);
    let from_csv = Trace::read_csv(&csv_path, Unit::Resistance)?;
    // the CSV carries rounded times; the exact time base lives in session.json
    let resistance = Trace::new(file.t0, file.dt, from_csv.values().to_vec(), Unit::Resistance)?;
    if resistance.len() != file.samples || !resistance.same_time_base(&from_csv) {
        return Err(Error::TimeBaseMismatch(format!(
            "{}: CSV does not match the time base in {SESSION_FILE}",
            csv_path.display()
        )));
    }
    let conductance = resistance.map(Unit::Conductance, |r| 1.0 / r)?;
    Ok(CalibrationSession {
        probe: file.probe,
        target_force: file.target_force,
        trial_index: file.trial_index,
        resistance,
        conductance,
        metadata: file.metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hookes_law() {
        assert_eq!(spring_force(0.0, 246.0).unwrap(), 0.0);
        assert!((spring_force(0.02, 246.0).unwrap() - 4.92).abs() < 1e-12);
        assert!((spring_deflection(5.25, 246.0).unwrap() - 0.021341).abs() < 1e-6);
        assert!(spring_force(-0.01, 246.0).is_err());
    }

    #[test]
    fn default_protocol_sample_count() {
        let p = CalibrationProtocol::default();
        p.validate().unwrap();
        assert_eq!(p.n_samples(), 2220);
    }

    #[test]
    fn probe_defaults_fit_the_sensor() {
        for p in ProbeSpec::all_defaults() {
            p.validate().unwrap();
        }
        assert!((ProbeSpec::default_for(ProbeKind::LargeFlat).active_area - SENSOR_AREA).abs() < 1e-18);
        let mut big = ProbeSpec::default_for(ProbeKind::LargeFlat);
        big.active_area *= 1.01;
        assert!(big.validate().is_err());
    }

    #[test]
    fn seeds_differ_per_key() {
        let a = session_seed(7, ProbeKind::LargeFlat, 0, 0);
        let b = session_seed(7, ProbeKind::LargeFlat, 0, 1);
        let c = session_seed(7, ProbeKind::SmallFlat, 0, 0);
        assert!(a != b && a != c && b != c);
        assert_eq!(a, session_seed(7, ProbeKind::LargeFlat, 0, 0));
    }

    #[test]
    fn out_of_travel_force_rejected() {
        let protocol = CalibrationProtocol::default();
        let err = run_calibration_trial(
            &ProbeSpec::default_for(ProbeKind::LargeFlat),
            20.0,
            0,
            &protocol,
            &PiezoModel::default(),
            &ForceLinearParams::default(),
            1,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidParameter {
                field: "target_force",
                ..
            }
        ));
    }

    #[test]
    fn probe_kind_parses() {
        assert_eq!("sharp_edge".parse::<ProbeKind>().unwrap(), ProbeKind::SharpEdge);
        assert!("round".parse::<ProbeKind>().is_err());
    }
}
