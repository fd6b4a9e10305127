//! Least-squares calibration of the creep model.
//!
//! Strain is recovered from resistance by inverting the resistance model at
//! the known applied force, the regressor `[eps, deps, -dsigma]` is fitted to
//! `sigma`, and the coefficients `(a, b, c)` are mapped back to
//! `(E0, E1, mu1)`. Line fits summarise plateau conductance and parameters
//! against force.

mod fit;
mod regression;
mod session;
mod strain;

pub use fit::{
    distinct_levels, fit_line, fit_parameter_force_lines, fit_steady_conductance, plateau_mean, r_squared, LinearFit,
    ParameterLines, DEFAULT_SETTLE_TIME,
};
pub use regression::{
    derivative, estimate_theta, estimate_theta_pooled, moving_average, recover_viscoelastic, regressor,
    EstimatorConfig, ThetaEstimate, MIN_SAMPLES, SINGULAR_CONDITION,
};
pub use session::{
    calibrate_probe, fit_session, fit_sessions, session_strain_stress, CalibrationFitConfig, FitFailure,
    ProbeCalibration, SessionFit,
};
pub use strain::{strain_from_resistance, strain_from_resistance_clamped};
