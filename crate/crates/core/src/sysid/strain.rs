use crate::error::{Error, Result};
use crate::roots::{brent, BracketError};
use crate::viscoelastic::{PiezoModel, STRAIN_CEILING};

/// Strain that explains resistance `rs` at `force`.
///
/// Resistance is strictly decreasing in strain, so the root in
/// `[0, STRAIN_CEILING]` is unique. The bracket is driven to machine
/// precision, which keeps the resistance residual below `1e-9 * rs`.
pub fn strain_from_resistance(model: &PiezoModel, force: f64, rs: f64) -> Result<f64> {
    let r_zero = model.resistance_from_state(force, 0.0)?;
    let r_ceiling = model.resistance_from_state(force, STRAIN_CEILING)?;
    let out_of_range = || Error::OutOfRange {
        resistance: rs,
        force,
        ceiling: STRAIN_CEILING,
    };
    if !(rs <= r_zero && rs >= r_ceiling) {
        return Err(out_of_range());
    }
    if rs == r_zero {
        return Ok(0.0);
    }
    let bulk_target = rs - model.contact_resistance(force);
    let root = brent(
        |e| model.bulk_resistance(e) - bulk_target,
        0.0,
        STRAIN_CEILING,
        1e-15,
        0.0,
        200,
    )
    .map_err(|e| match e {
        BracketError::NotBracketed | BracketError::MaxIterations => out_of_range(),
    })?;
    Ok(root.x)
}

/// Like [`strain_from_resistance`] but clamps readings just outside the
/// admissible band to the nearest end. Returns the strain and whether it was
/// clamped.
pub fn strain_from_resistance_clamped(model: &PiezoModel, force: f64, rs: f64) -> Result<(f64, bool)> {
    match strain_from_resistance(model, force, rs) {
        Ok(e) => Ok((e, false)),
        Err(Error::OutOfRange { .. }) => {
            let r_zero = model.resistance_from_state(force, 0.0)?;
            Ok((if rs > r_zero { 0.0 } else { STRAIN_CEILING }, true))
        }
        Err(e) => Err(e),
    }
}
