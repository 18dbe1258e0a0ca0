//! Steady states of complex droop (cubic in `v_s²`), of classical droop (quartic
//! in `v_s`) and their lift to the full-order state.

pub mod poly;

use nalgebra::Vector2;
use serde::Serialize;

use crate::model::{
    c2v, jacobian_second_order, lift_to, rhs_second_order, rotated_power, v2c, ModelOrder, StateVector, SystemParams,
};
use crate::{Error, Result};

/// Roots below this are not voltages.
pub const MIN_ROOT: f64 = 1e-12;
/// Trigonometric inconsistency above which a root is spurious.
pub const SPURIOUS_TOL: f64 = 1e-6;
/// Relative discriminant magnitude treated as marginal.
pub const MARGINAL_DISCRIMINANT: f64 = 1e-12;

/// `a x³ + b x² + c x + d = 0` in `x = v_s²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub delta: f64,
}

impl CubicCoefficients {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        let delta =
            b * b * c * c - 4.0 * a * c * c * c - 4.0 * d * b * b * b - 27.0 * a * a * d * d + 18.0 * a * b * c * d;
        Self { a, b, c, d, delta }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn scale(&self) -> f64 {
        poly::scale(&self.as_array())
    }

    /// Largest magnitude among the five discriminant terms, which sets the
    /// rounding scale of `delta`.
    pub fn discriminant_scale(&self) -> f64 {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        [b * b * c * c, 4.0 * a * c * c * c, 4.0 * d * b * b * b, 27.0 * a * a * d * d, 18.0 * a * b * c * d]
            .iter()
            .fold(0.0, |m, t| m.max(t.abs()))
    }

    pub fn uniqueness(&self) -> Uniqueness {
        let tol = MARGINAL_DISCRIMINANT * self.discriminant_scale();
        if self.delta.abs() < tol {
            Uniqueness::Marginal
        } else if self.delta < 0.0 {
            Uniqueness::Unique
        } else {
            Uniqueness::Multiple
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    Unique,
    Marginal,
    Multiple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub v_s: f64,
    /// Angle relative to the grid voltage, in `[0, 2π)`.
    pub delta_s: f64,
    pub v_vec: [f64; 2],
    /// Max-norm of the second-order vector field divided by `η`.
    pub residual: f64,
}

impl EquilibriumPoint {
    pub fn v(&self) -> Vector2<f64> {
        Vector2::new(self.v_vec[0], self.v_vec[1])
    }

    pub fn state(&self) -> StateVector {
        StateVector::new(ModelOrder::Second, &self.v_vec).expect("two components")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSet {
    /// Ordered by descending `v_s`.
    pub points: Vec<EquilibriumPoint>,
    pub coeffs: CubicCoefficients,
    pub unique: Uniqueness,
}

/// Steady-state decomposition shared by the cubic and the angle recovery:
/// `cos(δ+φ̃) = −(B − αx/v*²)·v_s/(v_g|y|)`, `sin(δ+φ̃) = C·v_s/(v_g|y|)`.
struct Reduced {
    /// `σφ* + α − |y| cos φ̃`.
    b_term: f64,
    /// `ρφ* + ωΔ/η + |y| sin φ̃`.
    c_term: f64,
    alpha_n: f64,
    y_abs: f64,
    phi_t: f64,
}

fn reduced(p: &SystemParams) -> Reduced {
    let c = &p.ctrl;
    let set = p.rotator() * c.sigma_bar_star;
    let y_abs = p.grid.y.norm();
    let phi_t = p.rotated_impedance_angle();
    Reduced {
        b_term: set.re + c.alpha - y_abs * phi_t.cos(),
        c_term: set.im + p.detuning() + y_abs * phi_t.sin(),
        alpha_n: c.alpha / (c.v_star * c.v_star),
        y_abs,
        phi_t,
    }
}

pub fn cubic_coefficients(p: &SystemParams) -> Result<CubicCoefficients> {
    if p.ctrl.alpha == 0.0 {
        return Err(Error::Degenerate("alpha = 0: use the voltage-following certificate"));
    }
    let r = reduced(p);
    Ok(CubicCoefficients::new(
        r.alpha_n * r.alpha_n,
        -2.0 * r.alpha_n * r.b_term,
        r.b_term * r.b_term + r.c_term * r.c_term,
        -(p.grid.v_g * r.y_abs).powi(2),
    ))
}

/// Real roots `x > 1e-12`, ascending.
pub fn solve_positive_roots(coeffs: &CubicCoefficients) -> Vec<f64> {
    poly::real_roots(&coeffs.as_array()).into_iter().filter(|x| *x > MIN_ROOT).collect()
}

/// Angle of the equilibrium with amplitude `v_s`.
pub fn recover_angle(v_s: f64, p: &SystemParams) -> Result<f64> {
    if v_s <= 0.0 {
        return Err(Error::InvalidParameter { field: "v_s", reason: "must be > 0".into() });
    }
    if p.grid.v_g <= 0.0 {
        return Err(Error::Degenerate("v_g = 0: angle undefined, use the off-grid classification"));
    }
    let r = reduced(p);
    let k = v_s / (p.grid.v_g * r.y_abs);
    let cos = -(r.b_term - r.alpha_n * v_s * v_s) * k;
    let sin = r.c_term * k;
    let mismatch = (cos * cos + sin * sin - 1.0).abs();
    if mismatch > SPURIOUS_TOL {
        return Err(Error::SpuriousRoot(mismatch));
    }
    Ok((sin.atan2(cos) - r.phi_t).rem_euclid(std::f64::consts::TAU))
}

/// Max-norm of the second-order field divided by `η`.
pub fn steady_state_residual(p: &SystemParams, v: Vector2<f64>) -> f64 {
    let s = StateVector::new(ModelOrder::Second, &[v.x, v.y]).expect("two components");
    let d = rhs_second_order(&s, p).expect("order two");
    d.as_slice().iter().fold(0.0_f64, |m, x| m.max(x.abs())) / p.ctrl.eta
}

/// A few Newton steps on the rectangular steady-state equation; rejected if
/// they move the point noticeably.
fn refine(p: &SystemParams, v0: Vector2<f64>) -> Vector2<f64> {
    let mut v = v0;
    for _ in 0..4 {
        let s = StateVector::new(ModelOrder::Second, &[v.x, v.y]).expect("two components");
        let f = rhs_second_order(&s, p).expect("order two").vhat();
        let Some(step) = jacobian_second_order(p, v).lu().solve(&f) else { break };
        v -= step;
        if step.norm() <= 1e-15 * v.norm() {
            break;
        }
    }
    if (v - v0).norm() <= 1e-6 * v0.norm() && steady_state_residual(p, v) <= steady_state_residual(p, v0) {
        v
    } else {
        v0
    }
}

pub fn equilibria(p: &SystemParams) -> Result<EquilibriumSet> {
    let coeffs = cubic_coefficients(p)?;
    let mut points = Vec::new();
    for x in solve_positive_roots(&coeffs).into_iter().rev() {
        let v_s = x.sqrt();
        let delta = match recover_angle(v_s, p) {
            Ok(d) => d,
            Err(Error::SpuriousRoot(_)) => continue,
            Err(e) => return Err(e),
        };
        let v = refine(p, Vector2::new(v_s * delta.cos(), v_s * delta.sin()));
        let point = EquilibriumPoint {
            v_s: v.norm(),
            delta_s: v.y.atan2(v.x).rem_euclid(std::f64::consts::TAU),
            v_vec: [v.x, v.y],
            residual: steady_state_residual(p, v),
        };
        if points.iter().all(|q: &EquilibriumPoint| (q.v_s - point.v_s).abs() > 1e-9) {
            points.push(point);
        }
    }
    Ok(EquilibriumSet { points, coeffs, unique: coeffs.uniqueness() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalPoint {
    pub v_s: f64,
    pub delta_s: f64,
}

/// Quartic in `v_s` for classical droop, descending powers.
pub fn classical_quartic(p: &SystemParams) -> [f64; 5] {
    let c = &p.ctrl;
    let (p_rot, q_rot) = rotated_power(c.p_star, c.q_star, c.phi);
    let y_abs = p.grid.y.norm();
    let phi_t = p.rotated_impedance_angle();
    // A(v) = a2 v² + a1 v + a0, B(v) = b2 v² + b0
    let (a2, a1, a0) = (-y_abs * phi_t.cos(), -c.alpha, q_rot + c.alpha * c.v_star);
    let (b2, b0) = (y_abs * phi_t.sin(), p_rot + p.detuning());
    let g = (p.grid.v_g * y_abs).powi(2);
    [a2 * a2 + b2 * b2, 2.0 * a2 * a1, a1 * a1 + 2.0 * a2 * a0 + 2.0 * b2 * b0 - g, 2.0 * a1 * a0, a0 * a0 + b0 * b0]
}

/// Steady states of classical droop; an empty list means none exist.
pub fn classical_droop_equilibria(p: &SystemParams) -> Vec<ClassicalPoint> {
    let c = &p.ctrl;
    let (p_rot, q_rot) = rotated_power(c.p_star, c.q_star, c.phi);
    let y_abs = p.grid.y.norm();
    let phi_t = p.rotated_impedance_angle();
    let mut out: Vec<ClassicalPoint> = poly::real_roots(&classical_quartic(p))
        .into_iter()
        .filter(|v| *v > MIN_ROOT)
        .filter_map(|v| {
            if p.grid.v_g <= 0.0 {
                return None;
            }
            let k = 1.0 / (v * p.grid.v_g * y_abs);
            let cos = (v * v * y_abs * phi_t.cos() - (q_rot + c.alpha * c.v_star - c.alpha * v)) * k;
            let sin = (p_rot + p.detuning() + v * v * y_abs * phi_t.sin()) * k;
            ((cos * cos + sin * sin - 1.0).abs() <= SPURIOUS_TOL)
                .then(|| ClassicalPoint { v_s: v, delta_s: (sin.atan2(cos) - phi_t).rem_euclid(std::f64::consts::TAU) })
        })
        .collect();
    out.reverse();
    out
}

/// Full-order state at a second-order equilibrium: every fast block on its
/// steady-state map, integrator states zero.
pub fn full_order_equilibrium(eq: &EquilibriumPoint, p: &SystemParams) -> StateVector {
    lift_to(&eq.state(), ModelOrder::Full, p)
}

/// Grid current `Y(v_s − v_g)` at an equilibrium.
pub fn equilibrium_current(eq: &EquilibriumPoint, p: &SystemParams) -> Vector2<f64> {
    c2v(p.grid.y * (v2c(eq.v()) - p.grid.v_g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::model::ParamSpec;

    #[test]
    fn alpha_zero_is_degenerate() {
        let p = ParamSpec { alpha: 0.0, ..ParamSpec::standard() }.build().unwrap();
        assert!(matches!(cubic_coefficients(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn vanishing_middle_coefficients() {
        // Choose the setpoint so that both bracketed terms vanish.
        // e^{jφ}ς̄* must equal |y|cos φ̃ − α − j|y| sin φ̃.
        let base = cases::dip_case(0.02).build().unwrap();
        let phi_t = base.rotated_impedance_angle();
        let y_abs = base.grid.y.norm();
        let want = num_complex::Complex64::new(y_abs * phi_t.cos() - base.ctrl.alpha, -y_abs * phi_t.sin());
        let sigma_bar = want / base.rotator();
        let p = base
            .modified(|s| {
                s.p_star = sigma_bar.re;
                s.q_star = -sigma_bar.im;
            })
            .unwrap();
        let k = cubic_coefficients(&p).unwrap();
        assert!(k.b.abs() < 1e-12 && k.c.abs() < 1e-12);
        let roots = solve_positive_roots(&k);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - (-k.d / k.a).cbrt()).abs() < 1e-9);
    }

    #[test]
    fn off_grid_cubic_has_zero_constant() {
        let p = cases::islanded_case(2.0).build().unwrap();
        let k = cubic_coefficients(&p).unwrap();
        assert_eq!(k.d, 0.0);
        assert!(equilibria(&p).is_err());
    }

    #[test]
    fn aligned_converter_has_zero_angle() {
        // Zero setpoints, v_g = v* = 1, resistive link matched by φ = 0: v = v_g is a steady state.
        let p = ParamSpec { r_g: 0.5, l_g_pu: 0.0, phi: 0.0, v_g: 1.0, ..ParamSpec::standard() }.build().unwrap();
        let d = recover_angle(1.0, &p).unwrap();
        assert!(d.abs() < 1e-12 || (d - std::f64::consts::TAU).abs() < 1e-12);
    }
}
