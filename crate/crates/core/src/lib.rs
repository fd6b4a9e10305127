//! Software toolkit for piezo-resistive contact-force sensing on a snake robot.
//!
//! - [`viscoelastic`]: forward sensor model (creep dynamics, strain→resistance).
//! - [`sysid`]: least-squares calibration of the creep model and line fits.
//! - [`reconstruct`]: dynamic force recovery from resistance traces.
//! - [`daq`]: multiplexed array scanning and sampling-rate model.
//! - [`rig`]: virtual calibration rig and on-disk session datasets.
//! - [`gait`]: follow-the-leader gait generation and sagittal kinematics.
//! - [`pipeline`]: the command implementations behind the `snakesense` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod daq;
pub mod error;
pub mod exec;
pub mod fsio;
pub mod gait;
pub mod pipeline;
pub mod reconstruct;
pub mod rig;
pub mod roots;
pub mod sysid;
pub mod trace;
pub mod viscoelastic;

pub use error::{Error, Result};
pub use exec::Execution;
pub use trace::{Trace, Unit};
