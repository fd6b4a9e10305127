//! Forward model of the sensor: force → stress → creep strain → resistance.

mod creep;
mod material;

pub use creep::{
    simulate_strain, simulate_strain_under_load, ForceLinearParams, LinearInForce, ParamModel, SlsCoefficients,
    ViscoParams,
};
pub use material::{
    gamma, ContactLimits, MaterialConstants, PiezoModel, ELECTRON_MASS, ELECTRON_VOLT, PLANCK, STRAIN_CEILING,
};

use crate::error::{Error, Result};
use crate::trace::{Trace, Unit};

/// Steady-state conductance `m*F + d`, S.
pub fn conductance_linear(m: f64, d: f64, force: f64) -> Result<f64> {
    if !(force >= 0.0) {
        return Err(Error::invalid("force", format!("must be >= 0, got {force}")));
    }
    let c = m * force + d;
    if c <= 0.0 {
        return Err(Error::NegativeConductance { value: c });
    }
    Ok(c)
}

/// Every intermediate signal of a forward simulation, on one time base.
#[derive(Debug, Clone)]
pub struct SimulatedResponse {
    pub stress: Trace,
    pub strain: Trace,
    pub resistance: Trace,
}

/// Resistance trace produced by a force trace pressed over `area`.
pub fn forward_simulate(model: &PiezoModel, params: &ParamModel, force: &Trace, area: f64) -> Result<Trace> {
    if !(area > 0.0) {
        return Err(Error::invalid("area", format!("must be > 0, got {area}")));
    }
    let areas = vec![area; force.len()];
    Ok(forward_simulate_detailed(model, params, force, &areas)?.resistance)
}

/// Forward simulation with a per-sample contact area.
pub fn forward_simulate_detailed(
    model: &PiezoModel,
    params: &ParamModel,
    force: &Trace,
    areas: &[f64],
) -> Result<SimulatedResponse> {
    if areas.len() != force.len() {
        return Err(Error::TimeBaseMismatch(format!(
            "{} force samples vs {} area samples",
            force.len(),
            areas.len()
        )));
    }
    if let Some(a) = areas.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::invalid("area", format!("must be > 0, got {a}")));
    }
    let stress_values: Vec<f64> = force.values().iter().zip(areas).map(|(f, a)| f / a).collect();
    let stress = force.with_values(stress_values, Unit::Stress)?;
    let strain = simulate_strain_under_load(params, &stress, force.values(), 0.0)?;
    let resistance_values = force
        .values()
        .iter()
        .zip(strain.values())
        .map(|(&f, &e)| {
            if model.is_contact(f) {
                model.resistance_from_state(f, e)
            } else {
                Ok(model.limits.r_max)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let resistance = force.with_values(resistance_values, Unit::Resistance)?;
    Ok(SimulatedResponse {
        stress,
        strain,
        resistance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_conductance() {
        assert_eq!(conductance_linear(0.01, 0.001, 0.0).unwrap(), 0.001);
        assert!((conductance_linear(0.01, 0.001, 5.0).unwrap() - 0.051).abs() < 1e-15);
        assert!(matches!(
            conductance_linear(-0.01, 0.001, 5.0),
            Err(Error::NegativeConductance { .. })
        ));
        let r1 = 1.0 / conductance_linear(0.01, 0.001, 1.0).unwrap();
        let r2 = 1.0 / conductance_linear(0.01, 0.001, 2.0).unwrap();
        assert!(r2 < r1);
    }

    #[test]
    fn zero_force_reads_open_circuit() {
        let model = PiezoModel::default();
        let force = Trace::from_fn(0.0, 0.1, 20, Unit::Force, |_| 0.0).unwrap();
        let r = forward_simulate(&model, &ParamModel::default(), &force, 1.4e-3).unwrap();
        assert!(r.values().iter().all(|&v| v == model.limits.r_max));
    }

    #[test]
    fn constant_force_creeps_monotonically_to_plateau() {
        let model = PiezoModel::default();
        let force = Trace::from_fn(0.0, 1.0 / 6.0, 2220, Unit::Force, |_| 3.0).unwrap();
        let r = forward_simulate(&model, &ForceLinearParams::default().into(), &force, 1.4e-3).unwrap();
        let v = r.values();
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
        let late_change = (v[2000] - v[2219]).abs() / v[2219];
        let early_change = (v[0] - v[300]).abs() / v[300];
        assert!(late_change < 1e-3 * early_change.max(1e-12) + 1e-4);
        assert!(early_change > 0.01);
    }
}
