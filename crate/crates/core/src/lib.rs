//! Transient-stability toolkit for a grid-connected converter running
//! complex droop control (dispatchable virtual oscillator control).
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds parameters, the frozen state layout and every vector field.
//! * [`equilibrium`] solves the steady-state cubic and lifts its roots.
//! * [`certify`] evaluates the analytic stability and instability conditions.
//! * [`sim`] integrates any model order with grid events.
//! * [`analysis`] classifies outcomes, sweeps gain boundaries and builds phase portraits.
//! * [`suite`] draws random parameter sets and checks the structural invariants on them.
//!
//! All quantities are per unit except time (s), angular rates (rad/s) and the
//! inductance/capacitance time constants, which are stored in s/rad.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cases;
pub mod certify;
pub mod equilibrium;
mod error;
pub mod model;
pub mod sim;
pub mod suite;

pub use error::{Error, Result};
pub use model::{Model, ModelOrder, ParamSpec, StateVector, SystemParams};
