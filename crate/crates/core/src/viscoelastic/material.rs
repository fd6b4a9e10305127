//! Strain→resistance mapping of the piezo-resistive film.
//!
//! The film resistance is the sum of a contact term that falls with the
//! applied force and a bulk tunnelling term that falls with strain:
//!
//! ```text
//! R_s = (rho1 + rho2)/2 * sqrt(pi*H/F) + R0 * (1 - eps) * exp(-gamma*D*eps*[(pi/(6*phi_vol))^(1/3) - 1])
//! gamma = (4*pi/h) * sqrt(2 * m_e * phi_barrier)
//! ```
//!
//! The conduction literature uses one symbol for both the filler volume
//! fraction and the inter-particle barrier height. They are different
//! quantities, kept here as `phi_vol` (dimensionless) and `phi_barrier` (J).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Electron rest mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// One electron-volt in joules.
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;

/// Largest strain the resistance model accepts. `(1 - eps)` changes sign at 1.
pub const STRAIN_CEILING: f64 = 0.99;

/// Fixed constants of the piezo-resistive composite.
///
/// The defaults are plausible values chosen to give a kΩ-range sensor whose
/// steady conductance is close to linear in force over a few newtons. They
/// are not measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConstants {
    /// Resistivity of the piezo-resistive film, Ω·m.
    pub rho1: f64,
    /// Resistivity of the conductive electrode, Ω·m.
    pub rho2: f64,
    /// Hardness, Pa.
    #[serde(rename = "H")]
    pub hardness: f64,
    /// Unloaded film resistance, Ω.
    #[serde(rename = "R0")]
    pub r0: f64,
    /// Filler particle diameter, m.
    #[serde(rename = "D")]
    pub diameter: f64,
    /// Filler volume fraction, in (0, pi/6).
    pub phi_vol: f64,
    /// Inter-particle potential barrier height, J.
    pub phi_barrier: f64,
}

impl Default for MaterialConstants {
    fn default() -> Self {
        Self {
            rho1: 7.1e-3,
            rho2: 7.0e-7,
            hardness: 1.0e7,
            r0: 1.0e4,
            diameter: 1.0e-8,
            phi_vol: 0.3,
            phi_barrier: ELECTRON_VOLT,
        }
    }
}

impl MaterialConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("H", self.hardness),
            ("R0", self.r0),
            ("D", self.diameter),
            ("phi_vol", self.phi_vol),
            ("phi_barrier", self.phi_barrier),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.phi_vol >= PI / 6.0 {
            return Err(Error::invalid(
                "phi_vol",
                format!(
                    "must be below pi/6 for resistance to fall with strain, got {}",
                    self.phi_vol
                ),
            ));
        }
        Ok(())
    }

    /// Tunnelling coefficient, 1/m.
    pub fn gamma(&self) -> f64 {
        gamma(self.phi_barrier)
    }

    /// `(pi / (6 phi_vol))^(1/3) - 1`, positive whenever `phi_vol < pi/6`.
    pub fn packing_factor(&self) -> f64 {
        (PI / (6.0 * self.phi_vol)).cbrt() - 1.0
    }

    /// Exponent scale `gamma * D * packing_factor` multiplying strain.
    pub fn tunnelling_exponent(&self) -> f64 {
        self.gamma() * self.diameter * self.packing_factor()
    }

    /// Prefactor of the contact term, `(rho1 + rho2)/2 * sqrt(pi*H)`, Ω·N^½.
    pub fn contact_scale(&self) -> f64 {
        0.5 * (self.rho1 + self.rho2) * (PI * self.hardness).sqrt()
    }
}

/// Tunnelling coefficient for a barrier height in joules.
pub fn gamma(phi_barrier: f64) -> f64 {
    4.0 * PI / PLANCK * (2.0 * ELECTRON_MASS * phi_barrier).sqrt()
}

/// Contact threshold and the open-circuit reading reported below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactLimits {
    /// Forces at or below this are treated as no contact, N.
    pub f_min: f64,
    /// Open-circuit resistance, Ω.
    pub r_max: f64,
}

impl Default for ContactLimits {
    fn default() -> Self {
        Self {
            f_min: 1e-3,
            r_max: 1e7,
        }
    }
}

/// Material constants together with the contact limits.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PiezoModel {
    pub material: MaterialConstants,
    #[serde(default)]
    pub limits: ContactLimits,
}

impl PiezoModel {
    pub fn new(material: MaterialConstants, limits: ContactLimits) -> Result<Self> {
        material.validate()?;
        if !(limits.f_min > 0.0) {
            return Err(Error::invalid("f_min", "contact threshold must be positive"));
        }
        let model = Self { material, limits };
        let r_contact = model.contact_resistance(limits.f_min) + material.r0;
        if !(limits.r_max > r_contact) {
            return Err(Error::invalid(
                "r_max",
                format!("open-circuit resistance must exceed the largest contact reading {r_contact}"),
            ));
        }
        Ok(model)
    }

    pub fn from_material(material: MaterialConstants) -> Result<Self> {
        Self::new(material, ContactLimits::default())
    }

    pub fn is_contact(&self, force: f64) -> bool {
        force > self.limits.f_min
    }

    /// Force-dependent contact term of the resistance, Ω.
    pub fn contact_resistance(&self, force: f64) -> f64 {
        self.material.contact_scale() / force.sqrt()
    }

    /// Strain-dependent bulk term of the resistance, Ω.
    pub fn bulk_resistance(&self, strain: f64) -> f64 {
        let m = &self.material;
        m.r0 * (1.0 - strain) * (-m.tunnelling_exponent() * strain).exp()
    }

    /// Derivative of [`bulk_resistance`](Self::bulk_resistance) with respect to strain.
    pub fn bulk_resistance_slope(&self, strain: f64) -> f64 {
        let m = &self.material;
        let k = m.tunnelling_exponent();
        -m.r0 * (-k * strain).exp() * (1.0 + k * (1.0 - strain))
    }

    pub fn resistance_from_state(&self, force: f64, strain: f64) -> Result<f64> {
        if !self.is_contact(force) {
            return Err(Error::NoContact {
                force,
                threshold: self.limits.f_min,
            });
        }
        if !(0.0..=STRAIN_CEILING).contains(&strain) {
            return Err(Error::InvalidStrain {
                strain,
                ceiling: STRAIN_CEILING,
            });
        }
        Ok(self.contact_resistance(force) + self.bulk_resistance(strain))
    }

    /// Largest resistance any contact state can produce: zero strain at the
    /// contact threshold. Readings above it are classified as no contact.
    pub fn max_contact_resistance(&self) -> f64 {
        self.contact_resistance(self.limits.f_min) + self.material.r0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_for_one_electron_volt() {
        // Hand arithmetic with h = 6.626e-34, m_e = 9.109e-31, phi = 1.602e-19:
        // sqrt(2 * 9.109e-31 * 1.602e-19) = 5.4024e-25; * 4pi / 6.626e-34 = 1.02456e10.
        let g = gamma(1.602e-19);
        assert!((g / 1.02456e10 - 1.0).abs() < 2e-4, "gamma = {g}");
    }

    #[test]
    fn gamma_scales_with_sqrt_of_barrier() {
        let g1 = gamma(0.3 * ELECTRON_VOLT);
        let g4 = gamma(1.2 * ELECTRON_VOLT);
        assert!((g4 / g1 - 2.0).abs() < 1e-12);
        assert!(gamma(1e-40) < 1e2);
    }

    #[test]
    fn zero_strain_resistance_is_contact_plus_r0() {
        let model = PiezoModel::default();
        let m = model.material;
        let f = 2.5;
        let expected = 0.5 * (m.rho1 + m.rho2) * (PI * m.hardness / f).sqrt() + m.r0;
        let r = model.resistance_from_state(f, 0.0).unwrap();
        assert!((r - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn resistance_matches_one_line_reimplementation() {
        let model = PiezoModel::default();
        let m = model.material;
        let one_line = |f: f64, e: f64| {
            let g = 4.0 * PI / PLANCK * (2.0 * ELECTRON_MASS * m.phi_barrier).sqrt();
            (m.rho1 + m.rho2) / 2.0 * (PI * m.hardness / f).sqrt()
                + m.r0 * (1.0 - e) * (-g * m.diameter * e * ((PI / (6.0 * m.phi_vol)).powf(1.0 / 3.0) - 1.0)).exp()
        };
        for &(f, e) in &[(0.5, 0.01), (1.75, 0.05), (5.25, 0.2), (10.0, 0.6), (0.002, 0.9)] {
            let r = model.resistance_from_state(f, e).unwrap();
            let o = one_line(f, e);
            assert!((r - o).abs() <= 1e-12 * o, "f={f} e={e}: {r} vs {o}");
        }
    }

    #[test]
    fn resistance_falls_with_strain_and_force() {
        let model = PiezoModel::default();
        let mut prev = f64::INFINITY;
        for i in 0..=990 {
            let e = i as f64 * 1e-3;
            let r = model.resistance_from_state(2.0, e).unwrap();
            assert!(r < prev);
            assert!(model.bulk_resistance_slope(e) < 0.0);
            prev = r;
        }
        let r_lo = model.resistance_from_state(1.0, 0.1).unwrap();
        let r_hi = model.resistance_from_state(4.0, 0.1).unwrap();
        assert!(r_hi < r_lo);
        let far = model.resistance_from_state(1e12, 0.1).unwrap();
        assert!((far - model.bulk_resistance(0.1)).abs() < 1e-4);
    }

    #[test]
    fn error_paths() {
        let model = PiezoModel::default();
        assert!(matches!(
            model.resistance_from_state(1e-3, 0.1),
            Err(Error::NoContact { .. })
        ));
        assert!(matches!(
            model.resistance_from_state(1.0, -0.01),
            Err(Error::InvalidStrain { .. })
        ));
        assert!(matches!(
            model.resistance_from_state(1.0, 0.995),
            Err(Error::InvalidStrain { .. })
        ));
        let mut bad = MaterialConstants {
            phi_vol: 0.6,
            ..MaterialConstants::default()
        };
        assert!(bad.validate().is_err());
        bad.phi_vol = 0.3;
        bad.r0 = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_uses_symbol_field_names() {
        let v = serde_json::to_value(MaterialConstants::default()).unwrap();
        for key in ["rho1", "rho2", "H", "R0", "D", "phi_vol", "phi_barrier"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
