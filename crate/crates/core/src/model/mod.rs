//! Parameters, the state layout and the vector fields of every model order.

mod params;
mod rhs;
mod state;

pub use params::{
    complex_matrix, quarter_turn, rotation, ControllerParams, FilterAndLoops, GridLink, ParamSpec, PerUnitBase,
    SystemParams,
};
pub(crate) use rhs::{c2v, v2c};
pub use rhs::{
    eval, inductor_current_ref, jacobian_second_order, lift_to, line_current_map, rhs_eighth_order, rhs_fourth_order,
    rhs_full_order, rhs_off_grid, rhs_polar, rhs_second_order, terminal_quantities,
};
pub use state::{normalized_power, rotated_power, Model, ModelOrder, PolarSignals, StateVector, STATE_NAMES};
