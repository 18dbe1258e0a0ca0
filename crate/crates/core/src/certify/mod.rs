//! Analytic stability and instability conditions.

mod full_order;
mod second_order;

use serde::Serialize;

pub use full_order::{
    check_full_order, composite_matrix, epsilon_range, perturbation_coefficients, roa_radius, spectral_norm,
    CompositeMatrix, EpsilonRange, FullOrderCertificate, PerturbationCoefficients, C1_DEFAULT_FRACTION,
    C1_SUPREMUM_FRACTION, EPSILON_SCAN_MAX,
};
pub use second_order::{
    certify_second_order, check_global, check_global_no_eq, check_local, check_unstable, check_voltage_following,
    jacobian, kappa, off_grid_classification, off_grid_radial_rate, scr_theta, spectral_abscissa, voltage_bound,
    InstabilityCheck, Kappa, LocalCheck, OffGridOutcome, PointChecks, SecondOrderCertificate, Verdict,
    VoltageFollowing, INCONCLUSIVE_MARGIN,
};

/// Outcome of one inequality; `margin > 0` exactly when it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub satisfied: bool,
    pub margin: f64,
}

impl Check {
    pub fn from_margin(margin: f64) -> Self {
        Self { satisfied: margin > 0.0, margin }
    }
}

/// `(x − y)ᵀ(‖x‖²x − ‖y‖²y) − ½‖y‖²‖x − y‖²`, non-negative for all planar pairs.
pub fn cubic_monotonicity_gap(x: nalgebra::Vector2<f64>, y: nalgebra::Vector2<f64>) -> f64 {
    let d = x - y;
    d.dot(&(x.norm_squared() * x - y.norm_squared() * y)) - 0.5 * y.norm_squared() * d.norm_squared()
}
