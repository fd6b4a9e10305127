use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rig::{CalibrationSession, ProbeKind, ProbeSpec};
use crate::trace::{Trace, Unit};
use crate::viscoelastic::{PiezoModel, ViscoParams};

use super::fit::{fit_parameter_force_lines, fit_steady_conductance, LinearFit, ParameterLines, DEFAULT_SETTLE_TIME};
use super::regression::{estimate_theta, recover_viscoelastic, EstimatorConfig, ThetaEstimate};
use super::strain::strain_from_resistance_clamped;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFitConfig {
    /// Smoothing window for the per-session regressor. About 5 s at 6 Hz;
    /// shorter windows let resistance noise dominate the derivatives.
    pub smoothing_window: usize,
    /// Start of the plateau window for the steady conductance, s.
    pub settle_time: f64,
}

impl Default for CalibrationFitConfig {
    fn default() -> Self {
        Self {
            smoothing_window: 31,
            settle_time: DEFAULT_SETTLE_TIME,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitFailure {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for FitFailure {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_owned(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFit {
    pub probe: ProbeKind,
    pub target_force: f64,
    pub trial_index: usize,
    /// Samples whose strain inversion had to be clamped.
    pub clamped_samples: usize,
    pub theta: Option<ThetaEstimate>,
    pub params: Option<ViscoParams>,
    pub failure: Option<FitFailure>,
}

/// Strain and nominal stress of a session. Strain is inverted at the
/// commanded force; stress uses the probe's nominal area, since the rig does
/// not observe how the contact patch evolves.
pub fn session_strain_stress(session: &CalibrationSession, model: &PiezoModel) -> Result<(Trace, Trace, usize)> {
    let force = session.commanded_force();
    let mut clamped = 0;
    let strain = force
        .values()
        .iter()
        .zip(session.resistance.values())
        .map(|(&f, &r)| {
            if !model.is_contact(f) {
                return Ok(0.0);
            }
            let (e, c) = strain_from_resistance_clamped(model, f, r)?;
            clamped += usize::from(c);
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    let strain = force.with_values(strain, Unit::Strain)?;
    let stress = force.map(Unit::Stress, |f| f / session.probe.active_area)?;
    Ok((strain, stress, clamped))
}

pub fn fit_session(session: &CalibrationSession, model: &PiezoModel, cfg: &CalibrationFitConfig) -> SessionFit {
    let mut out = SessionFit {
        probe: session.probe.kind,
        target_force: session.target_force,
        trial_index: session.trial_index,
        clamped_samples: 0,
        theta: None,
        params: None,
        failure: None,
    };
    let estimator = EstimatorConfig {
        smoothing_window: cfg.smoothing_window,
    };
    let result = session_strain_stress(session, model).and_then(|(strain, stress, clamped)| {
        out.clamped_samples = clamped;
        let theta = estimate_theta(&strain, &stress, &estimator)?;
        out.theta = Some(theta);
        recover_viscoelastic(theta.coefficients())
    });
    match result {
        Ok(p) => out.params = Some(p),
        Err(e) => out.failure = Some(FitFailure::from(&e)),
    }
    out
}

/// Per-session fits in input order.
pub fn fit_sessions(
    sessions: &[CalibrationSession],
    model: &PiezoModel,
    cfg: &CalibrationFitConfig,
    exec: Execution,
) -> Vec<SessionFit> {
    exec.map(sessions, |s| fit_session(s, model, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCalibration {
    pub probe: ProbeSpec,
    pub steady_conductance: Option<LinearFit>,
    pub steady_failure: Option<FitFailure>,
    pub parameter_lines: Option<ParameterLines>,
    pub parameter_failure: Option<FitFailure>,
    pub sessions: Vec<SessionFit>,
}

impl ProbeCalibration {
    /// A required fit (steady line or parameter lines) failed.
    pub fn is_degenerate(&self) -> bool {
        self.steady_conductance.is_none() || self.parameter_lines.is_none()
    }
}

/// Fits every session of one probe, then the conductance and parameter lines
/// against force. Sessions whose parameters could not be recovered are left
/// out of the parameter lines.
pub fn calibrate_probe(
    probe: &ProbeSpec,
    sessions: &[CalibrationSession],
    model: &PiezoModel,
    cfg: &CalibrationFitConfig,
    exec: Execution,
) -> ProbeCalibration {
    let fits = fit_sessions(sessions, model, cfg, exec);
    let (steady_conductance, steady_failure) = split(fit_steady_conductance(sessions, cfg.settle_time));
    let points: Vec<(f64, ViscoParams)> = fits
        .iter()
        .filter_map(|f| f.params.map(|p| (f.target_force, p)))
        .collect();
    let (parameter_lines, parameter_failure) = split(fit_parameter_force_lines(&points));
    ProbeCalibration {
        probe: *probe,
        steady_conductance,
        steady_failure,
        parameter_lines,
        parameter_failure,
        sessions: fits,
    }
}

fn split<T>(r: Result<T>) -> (Option<T>, Option<FitFailure>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(FitFailure::from(&e))),
    }
}
