use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use super::Check;
use crate::equilibrium::{EquilibriumPoint, EquilibriumSet, Uniqueness};
use crate::model::{jacobian_second_order, SystemParams};
use crate::{Error, Result};

/// Margins closer to zero than this are inconclusive for the instability test.
pub const INCONCLUSIVE_MARGIN: f64 = 1e-10;

/// Real and imaginary parts of `e^{jφ}(ς̄* − y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub kappa_r: f64,
    pub kappa_i: f64,
}

pub fn kappa(p: &SystemParams) -> Kappa {
    let k = p.rotator() * (p.ctrl.sigma_bar_star - p.grid.y);
    Kappa { kappa_r: k.re, kappa_i: k.im }
}

fn amplitude_ratio(p: &SystemParams, eq: &EquilibriumPoint) -> f64 {
    p.ctrl.alpha * eq.v_s * eq.v_s / (p.ctrl.v_star * p.ctrl.v_star)
}

/// Global stability given a unique equilibrium.
pub fn check_global(p: &SystemParams, set: &EquilibriumSet) -> Result<Check> {
    if set.unique != Uniqueness::Unique || set.points.len() != 1 {
        return Err(Error::TheoremInapplicable("global certificate requires a unique equilibrium"));
    }
    Ok(global_margin(p, &set.points[0]))
}

fn global_margin(p: &SystemParams, eq: &EquilibriumPoint) -> Check {
    let k = kappa(p);
    Check::from_margin(0.5 * amplitude_ratio(p, eq) - k.kappa_r - p.ctrl.alpha)
}

/// Global stability without knowledge of the equilibrium; also implies uniqueness.
pub fn check_global_no_eq(p: &SystemParams) -> Check {
    Check::from_margin(-kappa(p).kappa_r - p.ctrl.alpha)
}

pub fn jacobian(p: &SystemParams, eq: &EquilibriumPoint) -> Matrix2<f64> {
    jacobian_second_order(p, eq.v())
}

/// Largest real part among the eigenvalues of a real 2×2 matrix.
pub fn spectral_abscissa(a: &Matrix2<f64>) -> f64 {
    let half_tr = 0.5 * a.trace();
    let disc = half_tr * half_tr - a.determinant();
    if disc >= 0.0 {
        half_tr + disc.sqrt()
    } else {
        half_tr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalCheck {
    /// Sufficient inequality.
    pub sufficient: Check,
    /// Eigenvalue test on the Jacobian.
    pub hurwitz: bool,
    pub spectral_abscissa: f64,
}

pub fn check_local(p: &SystemParams, eq: &EquilibriumPoint) -> LocalCheck {
    let k = kappa(p);
    let a = jacobian(p, eq);
    let trace_negative = a.trace() < 0.0;
    let det_positive = a.determinant() > 0.0;
    LocalCheck {
        sufficient: Check::from_margin(amplitude_ratio(p, eq) - k.kappa_r - p.ctrl.alpha),
        hurwitz: trace_negative && det_positive,
        spectral_abscissa: spectral_abscissa(&a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstabilityCheck {
    pub a: Check,
    pub b: Check,
}

impl InstabilityCheck {
    pub fn any(&self) -> bool {
        self.a.satisfied || self.b.satisfied
    }

    pub fn verdict(&self) -> Verdict {
        let margins = [self.a.margin, self.b.margin];
        if margins.iter().any(|m| *m >= INCONCLUSIVE_MARGIN) {
            Verdict::Satisfied
        } else if margins.iter().any(|m| m.abs() < INCONCLUSIVE_MARGIN) {
            Verdict::Inconclusive
        } else {
            Verdict::Violated
        }
    }
}

pub fn check_unstable(p: &SystemParams, eq: &EquilibriumPoint) -> InstabilityCheck {
    let k = kappa(p);
    let r = amplitude_ratio(p, eq);
    let shifted = k.kappa_r + p.ctrl.alpha - 2.0 * r;
    let rot = p.detuning() + k.kappa_i;
    InstabilityCheck { a: Check::from_margin(shifted), b: Check::from_margin(r * r - shifted * shifted - rot * rot) }
}

/// Ultimate bound on the voltage amplitude of the second-order model.
pub fn voltage_bound(p: &SystemParams) -> Result<f64> {
    let c = &p.ctrl;
    if c.alpha == 0.0 {
        return Err(Error::Degenerate("voltage bound undefined for alpha = 0"));
    }
    let radicand = 1.0 + (kappa(p).kappa_r + p.grid.y.norm()) / c.alpha;
    let own = if radicand > 0.0 { c.v_star * radicand.sqrt() } else { 0.0 };
    Ok(own.max(p.grid.v_g))
}

/// Short-circuit ratio projected on angle `theta`: `g cos θ + b sin θ` for `y = g − jb`.
pub fn scr_theta(y: Complex64, theta: f64) -> f64 {
    let (g, b) = (y.re, -y.im);
    g * theta.cos() + b * theta.sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoltageFollowing {
    pub stable: Check,
    pub hurwitz: bool,
    pub spectral_abscissa: f64,
}

/// Global stability with `alpha = 0`; exact (if and only if).
pub fn check_voltage_following(p: &SystemParams) -> Result<VoltageFollowing> {
    if p.ctrl.alpha != 0.0 {
        return Err(Error::Precondition("not in voltage-following mode (alpha != 0)".into()));
    }
    let a = p.ctrl.omega_delta * crate::model::quarter_turn() + p.ctrl.eta * (p.ctrl.s_phi_star - p.y_phi());
    let set = p.rotator() * p.ctrl.sigma_bar_star;
    let grid = p.rotator() * p.grid.y;
    Ok(VoltageFollowing {
        stable: Check::from_margin(grid.re - set.re),
        hurwitz: a.trace() < 0.0 && a.determinant() > 0.0,
        spectral_abscissa: spectral_abscissa(&a),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OffGridOutcome {
    OriginGas,
    LimitCycle { amplitude_sq: f64 },
}

pub fn off_grid_classification(p: &SystemParams) -> Result<OffGridOutcome> {
    if p.grid.v_g != 0.0 {
        return Err(Error::Precondition("off-grid classification requires v_g = 0".into()));
    }
    let c = &p.ctrl;
    let k = kappa(p);
    if k.kappa_r + c.alpha <= 0.0 {
        return Ok(OffGridOutcome::OriginGas);
    }
    if c.alpha == 0.0 {
        return Err(Error::Degenerate("unbounded growth: limit-cycle branch with alpha = 0"));
    }
    Ok(OffGridOutcome::LimitCycle { amplitude_sq: c.v_star * c.v_star / c.alpha * (k.kappa_r + c.alpha) })
}

/// Radial component of the off-grid field at `v`, for checking the circle.
pub fn off_grid_radial_rate(p: &SystemParams, v: Vector2<f64>) -> f64 {
    let s = crate::StateVector::new(crate::ModelOrder::Second, &[v.x, v.y]).expect("two components");
    let d = crate::model::rhs_off_grid(&s, p).expect("order two").vhat();
    d.dot(&v) / v.norm()
}

/// Every second-order condition at one equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointChecks {
    pub point: EquilibriumPoint,
    /// `None` when the equilibrium is not unique.
    pub global_with_eq: Option<Check>,
    pub local: LocalCheck,
    pub unstable: InstabilityCheck,
    pub unstable_verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondOrderCertificate {
    pub kappa: Kappa,
    pub unique: Uniqueness,
    pub global_no_eq: Check,
    pub points: Vec<PointChecks>,
    pub v_m: f64,
    /// Short-circuit ratio along the rotation angle `φ`.
    pub scr_theta: f64,
}

pub fn certify_second_order(p: &SystemParams, set: &EquilibriumSet) -> Result<SecondOrderCertificate> {
    let unique = set.unique == Uniqueness::Unique && set.points.len() == 1;
    let points = set
        .points
        .iter()
        .map(|eq| {
            let unstable = check_unstable(p, eq);
            PointChecks {
                point: *eq,
                global_with_eq: unique.then(|| global_margin(p, eq)),
                local: check_local(p, eq),
                unstable,
                unstable_verdict: unstable.verdict(),
            }
        })
        .collect();
    Ok(SecondOrderCertificate {
        kappa: kappa(p),
        unique: set.unique,
        global_no_eq: check_global_no_eq(p),
        points,
        v_m: voltage_bound(p)?,
        scr_theta: scr_theta(p.grid.y, p.ctrl.phi),
    })
}
