use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rig::CalibrationSession;
use crate::trace::Trace;
use crate::viscoelastic::{ForceLinearParams, LinearInForce, ViscoParams};

/// Default start of the plateau window for steady conductance, s.
pub const DEFAULT_SETTLE_TIME: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    pub fn as_linear_in_force(&self) -> LinearInForce {
        LinearInForce {
            intercept: self.intercept,
            slope: self.slope,
        }
    }
}

/// Tolerance for treating two force levels as the same.
const LEVEL_TOLERANCE: f64 = 1e-9;

pub fn distinct_levels(xs: &[f64]) -> usize {
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| (*a - *b).abs() <= LEVEL_TOLERANCE * b.abs().max(1.0));
    sorted.len()
}

/// Ordinary least-squares line `y = intercept + slope * x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::invalid(
            "y",
            format!("{} x values vs {} y values", x.len(), y.len()),
        ));
    }
    let levels = distinct_levels(x);
    if levels < 2 {
        return Err(Error::InsufficientLevels {
            required: 2,
            found: levels,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(LinearFit {
        slope,
        intercept,
        r_squared: r_squared(x, y, slope, intercept),
        n_points: x.len(),
    })
}

/// `1 - SS_res / SS_tot`, clamped to [0, 1]. A constant response that the
/// line reproduces exactly counts as a perfect fit.
pub fn r_squared(x: &[f64], y: &[f64], slope: f64, intercept: f64) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (intercept + slope * a)).powi(2))
        .sum();
    if ss_tot <= f64::MIN_POSITIVE {
        return if ss_res <= f64::MIN_POSITIVE { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

/// Mean of the samples at or after `t0 + settle_time`.
pub fn plateau_mean(trace: &Trace, settle_time: f64) -> Result<f64> {
    let start = trace.t0() + settle_time;
    let tail: Vec<f64> = trace
        .times()
        .zip(trace.values())
        .filter(|(t, _)| *t >= start - 1e-9)
        .map(|(_, v)| *v)
        .collect();
    if tail.is_empty() {
        return Err(Error::invalid(
            "settle_time",
            format!(
                "trace ends at {} s, before the settle time {settle_time} s",
                trace.time(trace.len() - 1) - trace.t0()
            ),
        ));
    }
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Line through (target force, plateau conductance) over all sessions;
/// slope and intercept are `m` and `d` of `C = m F + d`.
pub fn fit_steady_conductance(sessions: &[CalibrationSession], settle_time: f64) -> Result<LinearFit> {
    let forces: Vec<f64> = sessions.iter().map(|s| s.target_force).collect();
    let levels = distinct_levels(&forces);
    if levels < 2 {
        return Err(Error::InsufficientLevels {
            required: 2,
            found: levels,
        });
    }
    let plateaus = sessions
        .iter()
        .map(|s| plateau_mean(&s.conductance, settle_time))
        .collect::<Result<Vec<_>>>()?;
    fit_line(&forces, &plateaus)
}

/// One line per parameter (E0, E1, mu1) against force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterLines {
    #[serde(rename = "E0")]
    pub e0: LinearFit,
    #[serde(rename = "E1")]
    pub e1: LinearFit,
    pub mu1: LinearFit,
}

impl ParameterLines {
    pub fn min_r_squared(&self) -> f64 {
        self.e0.r_squared.min(self.e1.r_squared).min(self.mu1.r_squared)
    }

    pub fn as_force_linear(&self) -> ForceLinearParams {
        ForceLinearParams {
            e0: self.e0.as_linear_in_force(),
            e1: self.e1.as_linear_in_force(),
            mu1: self.mu1.as_linear_in_force(),
        }
    }
}

/// Fits each parameter linearly against force. Several points may share a
/// force level (one per trial); at least two distinct levels are required.
pub fn fit_parameter_force_lines(points: &[(f64, ViscoParams)]) -> Result<ParameterLines> {
    let forces: Vec<f64> = points.iter().map(|(f, _)| *f).collect();
    let column = |pick: fn(&ViscoParams) -> f64| -> Vec<f64> { points.iter().map(|(_, p)| pick(p)).collect() };
    Ok(ParameterLines {
        e0: fit_line(&forces, &column(|p| p.e0))?,
        e1: fit_line(&forces, &column(|p| p.e1))?,
        mu1: fit_line(&forces, &column(|p| p.mu1))?,
    })
}
