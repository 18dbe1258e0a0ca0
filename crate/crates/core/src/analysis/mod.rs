//! Outcome classification, gain-boundary sweeps and phase portraits.

mod boundary;
mod classify;
mod portrait;

pub use boundary::{
    analytic_eta_bound, boundary_sweep, dip_scenario, empirical_eta_bound, BoundaryCurve, SweepConfig, SweepMode,
};
pub use classify::{bound_violations_after_entry, classify, Outcome, Thresholds};
pub use portrait::{phase_portrait, InitialGrid, PortraitEntry};
