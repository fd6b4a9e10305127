//! Stress→strain creep dynamics of the standard linear solid (Kelvin form).
//!
//! A spring `E0` in series with a parallel spring `E1` / dashpot `mu1`:
//!
//! ```text
//! sigma + mu1/(E0+E1) * dsigma/dt = E0*E1/(E0+E1) * eps + mu1*E0/(E0+E1) * deps/dt
//! ```
//!
//! The integrator solves the equation above for the strain with the
//! coefficients frozen over each step at the end-of-step force. With stress
//! linear between samples the update is exact, so a step input reproduces
//! the analytic creep curve to rounding error at any step size. The first
//! sample is the instantaneous elastic response `sigma/E0` plus any creep
//! already present.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{Trace, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscoParams {
    /// Series elastic coefficient, Pa.
    #[serde(rename = "E0")]
    pub e0: f64,
    /// Parallel elastic coefficient, Pa.
    #[serde(rename = "E1")]
    pub e1: f64,
    /// Viscous coefficient, Pa·s.
    pub mu1: f64,
}

/// Coefficients of `sigma + a*dsigma = b*eps + c*deps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlsCoefficients {
    /// s
    pub a: f64,
    /// Pa
    pub b: f64,
    /// Pa·s
    pub c: f64,
}

impl ViscoParams {
    pub fn new(e0: f64, e1: f64, mu1: f64) -> Result<Self> {
        let p = Self { e0, e1, mu1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e0 > 0.0) || !self.e0.is_finite() {
            return Err(Error::invalid("E0", format!("must be > 0, got {}", self.e0)));
        }
        if !(self.e1 > 0.0) || !self.e1.is_finite() {
            return Err(Error::invalid("E1", format!("must be > 0, got {}", self.e1)));
        }
        if !(self.mu1 >= 0.0) || !self.mu1.is_finite() {
            return Err(Error::invalid("mu1", format!("must be >= 0, got {}", self.mu1)));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> SlsCoefficients {
        let sum = self.e0 + self.e1;
        SlsCoefficients {
            a: self.mu1 / sum,
            b: self.e0 * self.e1 / sum,
            c: self.mu1 * self.e0 / sum,
        }
    }

    /// Retardation time `mu1 / E1` of the creep element, s.
    pub fn retardation_time(&self) -> f64 {
        self.mu1 / self.e1
    }

    /// Strain per unit stress once creep has settled.
    pub fn equilibrium_compliance(&self) -> f64 {
        1.0 / self.e0 + 1.0 / self.e1
    }
}

/// `value(F) = intercept + slope * F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearInForce {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearInForce {
    pub fn at(&self, force: f64) -> f64 {
        self.intercept + self.slope * force
    }
}

/// Viscoelastic parameters that grow linearly with the applied force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceLinearParams {
    #[serde(rename = "E0")]
    pub e0: LinearInForce,
    #[serde(rename = "E1")]
    pub e1: LinearInForce,
    pub mu1: LinearInForce,
}

impl Default for ForceLinearParams {
    /// Synthetic ground truth used by the virtual rig. Retardation time is
    /// 40 s at every force.
    fn default() -> Self {
        Self {
            e0: LinearInForce {
                intercept: 4.0e5,
                slope: 4.0e4,
            },
            e1: LinearInForce {
                intercept: 2.0e5,
                slope: 2.0e4,
            },
            mu1: LinearInForce {
                intercept: 8.0e6,
                slope: 8.0e5,
            },
        }
    }
}

impl ForceLinearParams {
    pub fn at(&self, force: f64) -> Result<ViscoParams> {
        let p = ViscoParams {
            e0: self.e0.at(force),
            e1: self.e1.at(force),
            mu1: self.mu1.at(force),
        };
        p.validate().map_err(|e| Error::DegenerateModel {
            force,
            reason: e.to_string(),
        })?;
        Ok(p)
    }

    /// Checks the parameters stay valid over `[lo, hi]`; linear functions
    /// only need the end points.
    pub fn validate_range(&self, lo: f64, hi: f64) -> Result<()> {
        self.at(lo)?;
        self.at(hi)?;
        Ok(())
    }
}

/// Either fixed parameters or parameters evaluated at the instantaneous force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamModel {
    Constant(ViscoParams),
    ForceLinear(ForceLinearParams),
}

impl Default for ParamModel {
    fn default() -> Self {
        ParamModel::Constant(ViscoParams::default())
    }
}

impl Default for ViscoParams {
    /// The default force-linear truth evaluated at 3.5 N.
    fn default() -> Self {
        Self {
            e0: 5.4e5,
            e1: 2.7e5,
            mu1: 1.08e7,
        }
    }
}

impl From<ViscoParams> for ParamModel {
    fn from(p: ViscoParams) -> Self {
        ParamModel::Constant(p)
    }
}

impl From<ForceLinearParams> for ParamModel {
    fn from(p: ForceLinearParams) -> Self {
        ParamModel::ForceLinear(p)
    }
}

impl ParamModel {
    pub fn at(&self, force: f64) -> Result<ViscoParams> {
        match self {
            ParamModel::Constant(p) => Ok(*p),
            ParamModel::ForceLinear(p) => p.at(force),
        }
    }
}

/// Integrates the creep model for a stress trace, evaluating the parameters
/// at `stress * area` for force-dependent models.
///
/// `initial_creep` is the delayed (viscous) strain at `t0`; the elastic part
/// responds instantly, so the first strain sample is `sigma(t0)/E0 + initial_creep`.
pub fn simulate_strain(model: &ParamModel, stress: &Trace, area: f64, initial_creep: f64) -> Result<Trace> {
    if !(area > 0.0) {
        return Err(Error::invalid("area", format!("must be > 0, got {area}")));
    }
    let forces: Vec<f64> = stress.values().iter().map(|s| s * area).collect();
    let strain = integrate(model, stress.values(), &forces, stress.dt(), initial_creep)?;
    stress.with_values(strain, Unit::Strain)
}

/// Like [`simulate_strain`] with an explicit force per sample driving the
/// parameter evaluation (used when the contact area changes over time).
pub fn simulate_strain_under_load(
    model: &ParamModel,
    stress: &Trace,
    force: &[f64],
    initial_creep: f64,
) -> Result<Trace> {
    if force.len() != stress.len() {
        return Err(Error::TimeBaseMismatch(format!(
            "{} stress samples vs {} force samples",
            stress.len(),
            force.len()
        )));
    }
    let strain = integrate(model, stress.values(), force, stress.dt(), initial_creep)?;
    stress.with_values(strain, Unit::Strain)
}

fn integrate(model: &ParamModel, stress: &[f64], force: &[f64], dt: f64, initial_creep: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(stress.len());
    let Some(&s0) = stress.first() else {
        return Ok(out);
    };
    let p0 = model.at(force[0])?;
    let mut strain = s0 / p0.e0 + initial_creep;
    out.push(strain);
    for n in 1..stress.len() {
        let p = model.at(force[n])?;
        let SlsCoefficients { a, b, c } = p.coefficients();
        let (s_prev, s_next) = (stress[n - 1], stress[n]);
        strain = if c == 0.0 {
            s_next / b
        } else {
            // c e' + b e = s + a s' with s linear over the step
            let slope = (s_next - s_prev) / dt;
            let start = (s_prev + a * slope - c * slope / b) / b;
            let decay = (-dt * b / c).exp();
            start + slope / b * dt + (strain - start) * decay
        };
        out.push(strain);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Analytic creep under a stress step sigma0 applied at t = 0.
    fn creep_oracle(p: &ViscoParams, sigma0: f64, t: f64) -> f64 {
        sigma0 * (1.0 / p.e0 + (1.0 / p.e1) * (1.0 - (-p.e1 * t / p.mu1).exp()))
    }

    #[test]
    fn step_response_matches_closed_form() {
        let p = ViscoParams::new(2.0, 1.0, 5.0).unwrap();
        let dt = 0.05;
        let stress = Trace::from_fn(0.0, dt, 2001, Unit::Stress, |_| 0.3).unwrap();
        let strain = simulate_strain(&p.into(), &stress, 1.0, 0.0).unwrap();
        assert!((strain.values()[0] - 0.15).abs() < 1e-15);
        for (i, &e) in strain.values().iter().enumerate() {
            let t = i as f64 * dt;
            let expected = creep_oracle(&p, 0.3, t);
            assert!((e - expected).abs() <= 1e-12 * expected, "t={t}");
        }
        // t = 5 s: sigma0 * (0.5 + (1 - e^-1)) = 1.1321 sigma0
        let at5 = strain.values()[100] / 0.3;
        assert!((at5 - 1.1321).abs() < 5e-5, "{at5}");
        let end = *strain.values().last().unwrap();
        assert!((end - 0.3 * p.equilibrium_compliance()).abs() < 1e-6);
    }

    #[test]
    fn zero_stress_stays_at_rest() {
        let stress = Trace::from_fn(0.0, 0.1, 50, Unit::Stress, |_| 0.0).unwrap();
        let strain = simulate_strain(&ViscoParams::default().into(), &stress, 1.0, 0.0).unwrap();
        assert!(strain.values().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn time_base_preserved() {
        let stress = Trace::from_fn(3.0, 0.2, 17, Unit::Stress, |t| 1e3 * (1.0 + t.sin())).unwrap();
        let strain = simulate_strain(&ViscoParams::default().into(), &stress, 1e-3, 0.0).unwrap();
        assert!(strain.same_time_base(&stress));
        assert_eq!(strain.unit(), Unit::Strain);
    }

    #[test]
    fn purely_elastic_model_is_algebraic() {
        let p = ViscoParams::new(2.0, 1.0, 0.0).unwrap();
        let stress = Trace::from_fn(0.0, 0.1, 10, Unit::Stress, |t| 0.1 * t).unwrap();
        let strain = simulate_strain(&p.into(), &stress, 1.0, 0.0).unwrap();
        let b = p.coefficients().b;
        for (s, e) in stress.values().iter().zip(strain.values()).skip(1) {
            assert!((e - s / b).abs() < 1e-15);
        }
    }

    #[test]
    fn force_linear_params_change_with_force() {
        let truth = ForceLinearParams::default();
        let lo = truth.at(1.0).unwrap();
        let hi = truth.at(5.0).unwrap();
        assert!(hi.e0 > lo.e0 && hi.e1 > lo.e1 && hi.mu1 > lo.mu1);
        assert_eq!(ParamModel::from(truth).at(3.5).unwrap(), ViscoParams::default());
        let bad = ForceLinearParams {
            e0: LinearInForce {
                intercept: 1.0,
                slope: -1.0,
            },
            ..truth
        };
        assert!(matches!(bad.at(2.0), Err(Error::DegenerateModel { .. })));
    }

    #[test]
    fn coefficients_match_definitions() {
        let c = ViscoParams::new(2.0, 1.0, 5.0).unwrap().coefficients();
        assert!((c.a - 5.0 / 3.0).abs() < 1e-15);
        assert!((c.b - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.c - 10.0 / 3.0).abs() < 1e-15);
    }
}
