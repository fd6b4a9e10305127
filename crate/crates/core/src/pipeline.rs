//! Command implementations behind the `snakesense` binary.
//!
//! Every command reads its inputs, runs one of the library pipelines and
//! writes its artifacts under an output directory. Outputs depend only on the
//! inputs and the seed, so re-runs are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::daq::{sampling_frequency, ArrayLayout, ScanTiming};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fsio;
use crate::gait::{
    chain_length, conforming_shape, forward_kinematics_from, gait_duration, interpolate_gait, obstacle_clearance,
    HalfCylinderObstacle, RobotSpec, DEFAULT_RATE, DEFAULT_SPEED,
};
use crate::reconstruct::DiagnosticSummary;
use crate::reconstruct::{
    reconstruct_force, reconstruction_report, ErrorMetrics, ReconstructionConfig, SampleDiagnostic,
};
use crate::rig::{self, CalibrationProtocol, CalibrationSession, ProbeKind, ProbeSpec};
use crate::sysid::{calibrate_probe, plateau_mean, CalibrationFitConfig, ProbeCalibration};
use crate::trace::{Trace, Unit};
use crate::viscoelastic::{
    forward_simulate, ContactLimits, ForceLinearParams, MaterialConstants, ParamModel, PiezoModel,
};

/// Parameter-line R² below which a probe is reported as not linear in force.
pub const LINEARITY_THRESHOLD: f64 = 0.9;

/// Seed used when neither the config nor the command line gives one.
pub const DEFAULT_SEED: u64 = 2024;

/// Paths and run settings. Relative paths are resolved against the directory
/// of the config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Material constants JSON.
    #[serde(default)]
    pub material: Option<PathBuf>,
    /// Contact limits JSON.
    #[serde(default)]
    pub limits: Option<PathBuf>,
    /// Calibration protocol JSON.
    #[serde(default)]
    pub protocol: Option<PathBuf>,
    /// Force-linear ground-truth parameters JSON.
    #[serde(default)]
    pub truth: Option<PathBuf>,
    /// Array layout JSON.
    #[serde(default)]
    pub layout: Option<PathBuf>,
    /// Scan timing JSON.
    #[serde(default)]
    pub timing: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub verbosity: u8,
    /// Run batch work on the calling thread only.
    #[serde(default)]
    pub sequential: bool,
}

/// Configuration with every referenced document loaded.
#[derive(Debug, Clone)]
pub struct Settings {
    pub model: PiezoModel,
    pub protocol: CalibrationProtocol,
    pub truth: ForceLinearParams,
    pub layout: ArrayLayout,
    pub timing: ScanTiming,
    pub out: PathBuf,
    pub seed: u64,
    pub verbosity: u8,
    pub exec: Execution,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            model: PiezoModel::default(),
            protocol: CalibrationProtocol::default(),
            truth: ForceLinearParams::default(),
            layout: ArrayLayout::default(),
            timing: ScanTiming::default(),
            out: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            verbosity: 0,
            exec: Execution::default(),
        }
    }
}

impl Settings {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbosity > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ))
    }
}

fn load_or_default<T: serde::de::DeserializeOwned + Default>(base: &Path, path: &Option<PathBuf>) -> Result<T> {
    match path {
        Some(p) => {
            let full = base.join(p);
            require_file(&full)?;
            fsio::read_json(&full)
        }
        None => Ok(T::default()),
    }
}

/// Loads the config file (if any) and applies command-line overrides.
pub fn load_settings(config: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<Settings> {
    let (cfg, base) = match config {
        Some(path) => {
            require_file(path)?;
            let cfg: PipelineConfig = fsio::read_json(path)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, base)
        }
        None => (PipelineConfig::default(), PathBuf::new()),
    };
    let material: MaterialConstants = load_or_default(&base, &cfg.material)?;
    let limits: ContactLimits = load_or_default(&base, &cfg.limits)?;
    let model = PiezoModel::new(material, limits)?;
    let protocol: CalibrationProtocol = load_or_default(&base, &cfg.protocol)?;
    protocol.validate()?;
    let truth: ForceLinearParams = load_or_default(&base, &cfg.truth)?;
    let layout: ArrayLayout = load_or_default(&base, &cfg.layout)?;
    layout.validate()?;
    let timing: ScanTiming = load_or_default(&base, &cfg.timing)?;
    timing.validate()?;
    let out = match (out, &cfg.out) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("out"),
    };
    Ok(Settings {
        model,
        protocol,
        truth,
        layout,
        timing,
        out,
        seed: seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        verbosity: cfg.verbosity,
        exec: if cfg.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
    })
}

// ---------------------------------------------------------------- simulate

pub enum SimulateInput {
    /// Run the calibration protocol for these probes.
    Protocol { probes: Vec<ProbeSpec> },
    /// Forward-simulate one force trace.
    ForceTrace {
        path: PathBuf,
        area: f64,
        params: ParamModel,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceManifest {
    pub seed: u64,
    pub source: PathBuf,
    pub area: f64,
    pub params: ParamModel,
    pub material: MaterialConstants,
    pub limits: ContactLimits,
    pub resistance: PathBuf,
}

pub fn cmd_simulate(settings: &Settings, input: &SimulateInput) -> Result<Vec<PathBuf>> {
    match input {
        SimulateInput::Protocol { probes } => {
            for p in probes {
                p.validate()?;
            }
            settings.log(format!(
                "simulating {} probe(s) x {} force level(s) x {} trial(s)",
                probes.len(),
                settings.protocol.force_levels.len(),
                settings.protocol.trials_per_level
            ));
            let sessions = rig::run_protocol(
                &settings.protocol,
                probes,
                &settings.model,
                &settings.truth,
                settings.seed,
                settings.exec,
            )?;
            let manifest = rig::save_dataset(&settings.out, settings.seed, &settings.protocol, probes, &sessions)?;
            let mut written = vec![settings.out.join(rig::MANIFEST_FILE)];
            written.extend(manifest.sessions.iter().map(|e| settings.out.join(&e.dir)));
            Ok(written)
        }
        SimulateInput::ForceTrace { path, area, params } => {
            require_file(path)?;
            let force = Trace::read_csv(path, Unit::Force)?;
            let resistance = forward_simulate(&settings.model, params, &force, *area)?;
            let out_csv = settings.out.join("resistance.csv");
            resistance.write_csv(&out_csv)?;
            let manifest = TraceManifest {
                seed: settings.seed,
                source: path.clone(),
                area: *area,
                params: *params,
                material: settings.model.material,
                limits: settings.model.limits,
                resistance: PathBuf::from("resistance.csv"),
            };
            let out_manifest = settings.out.join(rig::MANIFEST_FILE);
            fsio::write_json(&out_manifest, &manifest)?;
            Ok(vec![out_manifest, out_csv])
        }
    }
}

// --------------------------------------------------------------------- fit

/// What `reconstruct` needs from a calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub probe: ProbeKind,
    /// m²
    pub area: f64,
    pub params: ParamModel,
    /// `(m, d)` of the steady conductance line.
    pub init_linear: (f64, f64),
    pub model: PiezoModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    #[serde(flatten)]
    pub fits: ProbeCalibration,
    /// Smallest parameter-line R² is below [`LINEARITY_THRESHOLD`].
    pub nonlinear_parameter_trend: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub seed: u64,
    pub fit_config: CalibrationFitConfig,
    pub probes: Vec<ProbeReport>,
    /// Calibration of the first probe whose required fits succeeded.
    pub calibration: Option<Calibration>,
    pub degenerate: bool,
}

#[derive(Debug)]
pub struct FitOutcome {
    pub report: CalibrationReport,
    pub report_path: PathBuf,
}

pub const REPORT_FILE: &str = "calibration_report.json";

fn calibration_from(fits: &ProbeCalibration, model: &PiezoModel, max_force: f64) -> Option<Calibration> {
    let steady = fits.steady_conductance?;
    let lines = fits.parameter_lines?;
    let linear = lines.as_force_linear();
    let params = if linear.validate_range(0.0, 2.0 * max_force).is_ok() {
        ParamModel::ForceLinear(linear)
    } else {
        ParamModel::Constant(linear.at(max_force / 2.0).ok()?)
    };
    Some(Calibration {
        probe: fits.probe.kind,
        area: fits.probe.active_area,
        params,
        init_linear: (steady.slope, steady.intercept),
        model: *model,
    })
}

pub fn cmd_fit(settings: &Settings, dataset_dir: &Path, fit_config: &CalibrationFitConfig) -> Result<FitOutcome> {
    require_file(&dataset_dir.join(rig::MANIFEST_FILE))?;
    let dataset = rig::load_dataset(dataset_dir)?;
    let model = dataset
        .sessions
        .first()
        .map(|s| s.metadata.model)
        .unwrap_or(settings.model);
    let max_force = dataset
        .manifest
        .protocol
        .force_levels
        .iter()
        .fold(0.0_f64, |m, f| m.max(*f));

    let mut probes = Vec::new();
    for probe in &dataset.manifest.probes {
        let sessions: Vec<CalibrationSession> = dataset
            .sessions
            .iter()
            .filter(|s| s.probe.kind == probe.kind)
            .cloned()
            .collect();
        settings.log(format!("fitting {} ({} sessions)", probe.kind.name(), sessions.len()));
        let fits = calibrate_probe(probe, &sessions, &model, fit_config, settings.exec);
        let nonlinear = fits
            .parameter_lines
            .is_some_and(|l| l.min_r_squared() < LINEARITY_THRESHOLD);
        probes.push(ProbeReport {
            fits,
            nonlinear_parameter_trend: nonlinear,
        });
    }
    let calibration = probes.iter().find_map(|p| calibration_from(&p.fits, &model, max_force));
    let degenerate = probes.is_empty() || probes.iter().any(|p| p.fits.is_degenerate());
    let report = CalibrationReport {
        seed: dataset.manifest.seed,
        fit_config: *fit_config,
        probes,
        calibration,
        degenerate,
    };
    let report_path = settings.out.join(REPORT_FILE);
    fsio::write_json(&report_path, &report)?;
    write_fit_plots(&settings.out, &dataset.sessions, &report, fit_config)?;
    Ok(FitOutcome { report, report_path })
}

fn write_fit_plots(
    out: &Path,
    sessions: &[CalibrationSession],
    report: &CalibrationReport,
    cfg: &CalibrationFitConfig,
) -> Result<()> {
    let mut series = String::from("probe,target_force_N,trial,time_s,conductance_S\n");
    let mut plateaus = String::from("probe,target_force_N,trial,plateau_S\n");
    for s in sessions {
        let name = s.probe.kind.name();
        for (t, c) in s.conductance.times().zip(s.conductance.values()) {
            writeln!(series, "{name},{},{},{t},{c}", s.target_force, s.trial_index).expect("writing to a String");
        }
        if let Ok(p) = plateau_mean(&s.conductance, cfg.settle_time) {
            writeln!(plateaus, "{name},{},{},{p}", s.target_force, s.trial_index).expect("writing to a String");
        }
    }
    let mut params = String::from("probe,target_force_N,trial,E0_Pa,E1_Pa,mu1_Pa_s\n");
    for p in &report.probes {
        for f in &p.fits.sessions {
            if let Some(v) = f.params {
                writeln!(
                    params,
                    "{},{},{},{},{},{}",
                    f.probe.name(),
                    f.target_force,
                    f.trial_index,
                    v.e0,
                    v.e1,
                    v.mu1
                )
                .expect("writing to a String");
            }
        }
    }
    fsio::write_atomic(&out.join("conductance_vs_time.csv"), series.as_bytes())?;
    fsio::write_atomic(&out.join("plateau_vs_force.csv"), plateaus.as_bytes())?;
    fsio::write_atomic(&out.join("params_vs_force.csv"), params.as_bytes())
}

// ------------------------------------------------------------- reconstruct

/// Accepts either a full calibration report or a bare calibration document.
pub fn load_calibration(path: &Path) -> Result<Calibration> {
    require_file(path)?;
    let value: serde_json::Value = fsio::read_json(path)?;
    let json_err = |source| Error::Json {
        path: path.to_path_buf(),
        source,
    };
    if value.get("probes").is_some() {
        let report: CalibrationReport = serde_json::from_value(value).map_err(json_err)?;
        report
            .calibration
            .ok_or_else(|| Error::invalid("calibration", format!("{} holds no usable calibration", path.display())))
    } else {
        serde_json::from_value(value).map_err(json_err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDiagnostics {
    pub summary: DiagnosticSummary,
    pub metrics: Option<ErrorMetrics>,
    pub samples: Vec<SampleDiagnostic>,
}

pub struct ReconstructArgs {
    pub resistance: PathBuf,
    pub calibration: PathBuf,
    /// Force trace to compare against.
    pub reference: Option<PathBuf>,
    pub area: Option<f64>,
    pub fp_tol: Option<f64>,
    pub fp_max_iter: Option<usize>,
}

pub fn cmd_reconstruct(settings: &Settings, args: &ReconstructArgs) -> Result<ReconstructionDiagnostics> {
    require_file(&args.resistance)?;
    let resistance = Trace::read_csv(&args.resistance, Unit::Resistance)?;
    let calibration = load_calibration(&args.calibration)?;
    let reference = match &args.reference {
        Some(p) => {
            require_file(p)?;
            let r = Trace::read_csv(p, Unit::Force)?;
            resistance.check_time_base(&r)?;
            Some(r)
        }
        None => None,
    };
    let mut cfg = ReconstructionConfig::new(args.area.unwrap_or(calibration.area), calibration.init_linear);
    if let Some(t) = args.fp_tol {
        cfg.fp_tol = t;
    }
    if let Some(n) = args.fp_max_iter {
        cfg.fp_max_iter = n;
    }
    let rec = reconstruct_force(&resistance, &calibration.model, &calibration.params, &cfg)?;
    let metrics = reference
        .as_ref()
        .map(|r| reconstruction_report(&rec.force, r))
        .transpose()?;
    rec.force.write_csv(&settings.out.join("force.csv"))?;
    let diagnostics = ReconstructionDiagnostics {
        summary: rec.summary(),
        metrics,
        samples: rec.diagnostics,
    };
    fsio::write_json(&settings.out.join("diagnostics.json"), &diagnostics)?;
    Ok(diagnostics)
}

// -------------------------------------------------------------------- gait

pub struct GaitArgs {
    pub obstacle: Option<PathBuf>,
    pub robot: Option<PathBuf>,
    pub speed: f64,
    pub rate: f64,
    /// Defaults to the full propagation time.
    pub duration: Option<f64>,
    /// Write a body-shape snapshot (in the frame of the conforming pose's
    /// head) every this many ticks.
    pub fk_every: usize,
}

impl Default for GaitArgs {
    fn default() -> Self {
        Self {
            obstacle: None,
            robot: None,
            speed: DEFAULT_SPEED,
            rate: DEFAULT_RATE,
            duration: None,
            fk_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearanceReport {
    pub obstacle: HalfCylinderObstacle,
    pub per_point: Vec<f64>,
    pub min: f64,
    pub chain_length: f64,
    pub ticks: usize,
    pub duration: f64,
}

pub fn cmd_gait(settings: &Settings, args: &GaitArgs) -> Result<ClearanceReport> {
    let obstacle: HalfCylinderObstacle = load_or_default(Path::new(""), &args.obstacle)?;
    let spec: RobotSpec = load_or_default(Path::new(""), &args.robot)?;
    if !(args.fk_every >= 1) {
        return Err(Error::invalid("fk_every", "must be at least 1"));
    }
    let shape = conforming_shape(&obstacle, &spec)?;
    let duration = match args.duration {
        Some(d) => d,
        None => gait_duration(&shape.keyframe, args.speed)?,
    };
    let stream = interpolate_gait(&shape.keyframe, args.speed, args.rate, duration)?;
    let points = forward_kinematics_from(shape.base, &shape.keyframe.angles, &spec)?;
    let per_point = obstacle_clearance(&points, &obstacle);
    let min = per_point.iter().copied().fold(f64::INFINITY, f64::min);

    let mut fk = String::from("time_s,point,x_m,z_m\n");
    for (i, tick) in stream.ticks.iter().enumerate().step_by(args.fk_every) {
        let pts = forward_kinematics_from(shape.base, tick, &spec)?;
        let t = stream.time(i);
        for (k, p) in pts.iter().enumerate() {
            writeln!(fk, "{t},{k},{},{}", p.x, p.z).expect("writing to a String");
        }
    }

    fsio::write_json(&settings.out.join("keyframe.json"), &shape)?;
    stream.write_csv(&settings.out.join("commands.csv"), spec.n_joints())?;
    fsio::write_atomic(&settings.out.join("fk_trajectory.csv"), fk.as_bytes())?;
    let report = ClearanceReport {
        obstacle,
        per_point,
        min,
        chain_length: chain_length(&points),
        ticks: stream.len(),
        duration,
    };
    fsio::write_json(&settings.out.join("clearance.json"), &report)?;
    Ok(report)
}

// --------------------------------------------------------------- scanbench

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanbenchRow {
    pub n_sensors: usize,
    pub freq_1daq_hz: f64,
    pub freq_2daq_hz: f64,
}

pub fn scanbench_rows(sweep: &[usize], timing: &ScanTiming) -> Result<Vec<ScanbenchRow>> {
    timing.validate()?;
    if let Some(n) = sweep.iter().find(|n| **n == 0) {
        return Err(Error::invalid("sweep", format!("sensor counts must be >= 1, got {n}")));
    }
    let one = timing.with_daqs(1);
    let two = timing.with_daqs(2);
    Ok(sweep
        .iter()
        .map(|&n| ScanbenchRow {
            n_sensors: n,
            freq_1daq_hz: sampling_frequency(n, &one),
            freq_2daq_hz: sampling_frequency(n, &two),
        })
        .collect())
}

pub fn cmd_scanbench(settings: &Settings, sweep: &[usize]) -> Result<Vec<ScanbenchRow>> {
    let rows = scanbench_rows(sweep, &settings.timing)?;
    let path = settings.out.join("scanbench.csv");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let csv_err = |source| Error::Csv {
        path: path.clone(),
        source,
    };
    w.write_record(["n_sensors", "freq_1daq_hz", "freq_2daq_hz"])
        .map_err(csv_err)?;
    for r in &rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(&path, e.into_error()))?;
    fsio::write_atomic(&path, &bytes)?;
    Ok(rows)
}

/// Probe list for `simulate`: `all` or comma-free repeated names.
pub fn probes_from_names(names: &[String]) -> Result<Vec<ProbeSpec>> {
    if names.is_empty() {
        return Ok(vec![ProbeSpec::default_for(ProbeKind::LargeFlat)]);
    }
    if names.iter().any(|n| n == "all") {
        return Ok(ProbeSpec::all_defaults());
    }
    names
        .iter()
        .map(|n| n.parse::<ProbeKind>().map(ProbeSpec::default_for))
        .collect()
}
