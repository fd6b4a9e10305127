//! Dynamic force recovery from a resistance trace.
//!
//! Each sample is solved by a fixed-point iteration on force: the contact
//! term of the resistance model needs `F`, strain follows from inverting the
//! model at that `F`, one backward-Euler step of the stress dynamics turns
//! the strain history into stress, and `F = sigma * A` closes the loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sysid::strain_from_resistance_clamped;
use crate::trace::{Trace, Unit};
use crate::viscoelastic::{ParamModel, PiezoModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    /// Active contact area, m².
    pub area: f64,
    #[serde(default = "default_fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "default_fp_max_iter")]
    pub fp_max_iter: usize,
    /// `(m, d)` of the steady conductance line, used for the first guess.
    pub init_linear: (f64, f64),
}

fn default_fp_tol() -> f64 {
    1e-6
}

fn default_fp_max_iter() -> usize {
    50
}

impl ReconstructionConfig {
    pub fn new(area: f64, init_linear: (f64, f64)) -> Self {
        Self {
            area,
            fp_tol: default_fp_tol(),
            fp_max_iter: default_fp_max_iter(),
            init_linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area > 0.0) {
            return Err(Error::invalid("area", format!("must be > 0, got {}", self.area)));
        }
        if !(self.fp_tol > 0.0) {
            return Err(Error::invalid("fp_tol", format!("must be > 0, got {}", self.fp_tol)));
        }
        if self.fp_max_iter < 1 {
            return Err(Error::invalid("fp_max_iter", "must be at least 1"));
        }
        if !self.init_linear.0.is_finite() || !self.init_linear.1.is_finite() {
            return Err(Error::invalid("init_linear", "slope and offset must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostic {
    pub iterations: usize,
    pub converged: bool,
    /// Reading classified as open circuit; force reported as zero.
    pub no_contact: bool,
    /// Strain inversion fell outside `[0, STRAIN_CEILING]` and was clamped.
    pub out_of_range: bool,
    /// Last force update magnitude, N.
    pub last_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub samples: usize,
    pub no_contact: usize,
    pub out_of_range: usize,
    pub not_converged: usize,
    pub max_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub force: Trace,
    pub diagnostics: Vec<SampleDiagnostic>,
}

impl Reconstruction {
    pub fn summary(&self) -> DiagnosticSummary {
        let mut s = DiagnosticSummary {
            samples: self.diagnostics.len(),
            ..Default::default()
        };
        for d in &self.diagnostics {
            s.no_contact += usize::from(d.no_contact);
            s.out_of_range += usize::from(d.out_of_range);
            s.not_converged += usize::from(!d.converged);
            s.max_iterations = s.max_iterations.max(d.iterations);
        }
        s
    }
}

/// Inverts the steady conductance line sample by sample, ignoring creep.
pub fn naive_force(resistance: &Trace, m: f64, d: f64) -> Result<Trace> {
    if !(m > 0.0) {
        return Err(Error::invalid("init_linear", format!("slope must be > 0, got {m}")));
    }
    resistance.map(Unit::Force, |r| ((1.0 / r - d) / m).max(0.0))
}

pub fn reconstruct_force(
    resistance: &Trace,
    model: &PiezoModel,
    params: &ParamModel,
    cfg: &ReconstructionConfig,
) -> Result<Reconstruction> {
    cfg.validate()?;
    if resistance.unit() != Unit::Resistance {
        return Err(Error::invalid(
            "resistance",
            format!("expected a resistance trace, got {:?}", resistance.unit()),
        ));
    }
    let h = resistance.dt();
    let open_circuit = model.max_contact_resistance();
    let floor = model.limits.f_min * (1.0 + 1e-9);
    let (m, d) = cfg.init_linear;

    let mut force = Vec::with_capacity(resistance.len());
    let mut diagnostics = Vec::with_capacity(resistance.len());
    // (stress, strain, force) of the previous contact sample
    let mut prev: Option<(f64, f64, f64)> = None;

    for &rs in resistance.values() {
        if rs >= open_circuit {
            prev = None;
            force.push(0.0);
            diagnostics.push(SampleDiagnostic {
                iterations: 0,
                converged: true,
                no_contact: true,
                out_of_range: false,
                last_step: 0.0,
            });
            continue;
        }
        let guess = match prev {
            Some((_, _, f)) => f,
            None => {
                let g = (1.0 / rs - d) / m;
                if g.is_finite() {
                    g
                } else {
                    2.0 * floor
                }
            }
        };
        let mut f = guess.max(floor);
        let mut state = (0.0, 0.0);
        let mut diag = SampleDiagnostic {
            iterations: 0,
            converged: false,
            no_contact: false,
            out_of_range: false,
            last_step: f64::INFINITY,
        };
        for it in 1..=cfg.fp_max_iter {
            let (eps, clamped) = strain_from_resistance_clamped(model, f, rs)?;
            let coeffs = params.at(f)?.coefficients();
            let sigma = match prev {
                None => params.at(f)?.e0 * eps,
                Some((s_prev, e_prev, _)) => {
                    let ah = coeffs.a / h;
                    (ah * s_prev + coeffs.b * eps + coeffs.c * (eps - e_prev) / h) / (ah + 1.0)
                }
            };
            let f_new = sigma * cfg.area;
            let step = (f_new - f).abs();
            diag.iterations = it;
            diag.out_of_range = clamped;
            diag.last_step = step;
            state = (sigma, eps);
            f = f_new.max(floor);
            if step <= cfg.fp_tol {
                diag.converged = true;
                break;
            }
        }
        let reported = (state.0 * cfg.area).max(0.0);
        prev = Some((state.0, state.1, f));
        force.push(reported);
        diagnostics.push(diag);
    }
    Ok(Reconstruction {
        force: resistance.with_values(force, Unit::Force)?,
        diagnostics,
    })
}

/// Reconstructs independent traces (e.g. one per sensor) under `exec`.
pub fn reconstruct_batch(
    traces: &[Trace],
    model: &PiezoModel,
    params: &ParamModel,
    cfg: &ReconstructionConfig,
    exec: Execution,
) -> Result<Vec<Reconstruction>> {
    exec.try_map(traces, |t| reconstruct_force(t, model, params, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rms: f64,
    pub max_abs: f64,
    /// RMS divided by the peak magnitude of the reference.
    pub relative_rms: f64,
}

pub fn reconstruction_report(reconstructed: &Trace, reference: &Trace) -> Result<ErrorMetrics> {
    reconstructed.check_time_base(reference)?;
    let n = reference.len() as f64;
    let mut sq = 0.0;
    let mut max_abs: f64 = 0.0;
    for (a, b) in reconstructed.values().iter().zip(reference.values()) {
        let e = (a - b).abs();
        sq += e * e;
        max_abs = max_abs.max(e);
    }
    let rms = (sq / n).sqrt();
    let peak = reference.values().iter().fold(0.0_f64, |p, v| p.max(v.abs()));
    let relative_rms = if peak > 0.0 {
        rms / peak
    } else if rms == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(ErrorMetrics {
        rms,
        max_abs,
        relative_rms,
    })
}
