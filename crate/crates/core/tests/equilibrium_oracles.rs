//! Steady states checked against direct evaluations of the coefficient
//! formulas and an independent Newton solve of the vector equation.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use dvoc_core::cases::{deep_dip_case, dip_case, resistive_grid_case};
use dvoc_core::certify::check_global_no_eq;
use dvoc_core::equilibrium::{
    classical_droop_equilibria, classical_quartic, cubic_coefficients, equilibria, full_order_equilibrium,
    recover_angle, solve_positive_roots, Uniqueness,
};
use dvoc_core::model::{ParamSpec, SystemParams};
use nalgebra::{Matrix2, Vector2};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Second-order steady-state equation in plain real arithmetic.
fn field(p: &SystemParams, v: Vector2<f64>) -> Vector2<f64> {
    let c = &p.ctrl;
    let (ph_c, ph_s) = (c.phi.cos(), c.phi.sin());
    let (sr, si) = (c.p_star / c.v_star.powi(2), -c.q_star / c.v_star.powi(2));
    let set = Vector2::new(ph_c * sr - ph_s * si, ph_s * sr + ph_c * si);
    let z2 = p.grid.r_g.powi(2) + (p.grid.omega_g * p.base.omega0 * p.grid.l_g).powi(2);
    let (yr, yi) = (p.grid.r_g / z2, -(p.grid.omega_g * p.base.omega0 * p.grid.l_g) / z2);
    let yphi = Vector2::new(ph_c * yr - ph_s * yi, ph_s * yr + ph_c * yi);
    let mul = |a: Vector2<f64>, b: Vector2<f64>| Vector2::new(a.x * b.x - a.y * b.y, a.x * b.y + a.y * b.x);
    let amp = (c.v_star.powi(2) - v.norm_squared()) / c.v_star.powi(2);
    Vector2::new(-c.omega_delta * v.y, c.omega_delta * v.x)
        + c.eta * (mul(set - yphi, v) + mul(yphi, Vector2::new(p.grid.v_g, 0.0)) + c.alpha * amp * v)
}

fn newton(p: &SystemParams, mut v: Vector2<f64>) -> Option<Vector2<f64>> {
    for _ in 0..100 {
        let f = field(p, v);
        let h = 1e-7;
        let jx = (field(p, v + Vector2::new(h, 0.0)) - field(p, v - Vector2::new(h, 0.0))) / (2.0 * h);
        let jy = (field(p, v + Vector2::new(0.0, h)) - field(p, v - Vector2::new(0.0, h))) / (2.0 * h);
        let step = Matrix2::from_columns(&[jx, jy]).lu().solve(&f)?;
        v -= step;
        if step.norm() < 1e-14 {
            return Some(v);
        }
    }
    None
}

#[test]
fn resistive_grid_cubic_matches_direct_evaluation() {
    let p = resistive_grid_case(3.0).build().unwrap();
    let k = cubic_coefficients(&p).unwrap();
    // Frozen from an independent complex-arithmetic evaluation of the coefficient formulas.
    let frozen = [9.0, -15.242283553372465, 6.9535335533724645, -0.19531250000000003];
    for (got, want) in k.as_array().iter().zip(frozen) {
        assert!(rel(*got, want) < 1e-12, "{got} vs {want}");
    }
    assert!(rel(k.delta, -366.79902283422416) < 1e-9);
    assert_eq!(k.uniqueness(), Uniqueness::Unique);
    assert_eq!(solve_positive_roots(&k).len(), 1);
    assert!(k.a > 0.0 && k.c >= 0.0 && k.d <= 0.0);
}

#[test]
fn unique_root_agrees_with_newton_on_the_vector_equation() {
    for alpha in [1.0, 3.0] {
        let p = resistive_grid_case(alpha).build().unwrap();
        let set = equilibria(&p).unwrap();
        assert_eq!(set.points.len(), 1);
        let eq = set.points[0];
        let mut hits = 0;
        for start in [Vector2::new(0.3, 0.3), Vector2::new(-0.3, 0.5), Vector2::new(0.0, -0.2)] {
            if let Some(v) = newton(&p, start) {
                if (v - eq.v()).norm() < 1e-9 {
                    hits += 1;
                }
            }
        }
        assert!(hits > 0, "no Newton start reached the cubic root for alpha = {alpha}");
    }
    let eq = equilibria(&resistive_grid_case(1.0).build().unwrap()).unwrap().points[0];
    assert!((eq.v() - Vector2::new(-0.14312, 0.59030)).amax() < 1e-5);
}

#[test]
fn pre_dip_equilibrium_is_unique_with_small_residual() {
    let p = dip_case(0.02).build().unwrap();
    let set = equilibria(&p).unwrap();
    assert_eq!(set.unique, Uniqueness::Unique);
    assert!(check_global_no_eq(&p).satisfied);
    let eq = set.points[0];
    assert!(eq.residual <= 1e-10);
    assert!(field(&p, eq.v()).amax() / p.ctrl.eta <= 1e-10);
    assert!((0.0..std::f64::consts::TAU).contains(&eq.delta_s));
    let delta = recover_angle(eq.v_s, &p).unwrap();
    assert!((delta - eq.delta_s).abs() < 1e-8);
}

#[test]
fn unstable_equilibrium_has_right_half_plane_eigenvalue() {
    let p = resistive_grid_case(3.0).build().unwrap();
    let eq = equilibria(&p).unwrap().points[0];
    let h = 1e-7;
    let v = eq.v();
    let jx = (field(&p, v + Vector2::new(h, 0.0)) - field(&p, v - Vector2::new(h, 0.0))) / (2.0 * h);
    let jy = (field(&p, v + Vector2::new(0.0, h)) - field(&p, v - Vector2::new(0.0, h))) / (2.0 * h);
    let a = Matrix2::from_columns(&[jx, jy]);
    // Characteristic polynomial λ² − tr λ + det: some root has positive real part
    // exactly when tr > 0 or det < 0.
    assert!(a.trace() > 0.0 || a.determinant() < 0.0);
}

#[test]
fn deep_dip_has_no_classical_steady_state() {
    let p = deep_dip_case().build().unwrap();
    let q = classical_quartic(&p);
    for (got, want) in q.iter().zip([3.125, 2.5, -1.53125, -2.0, 1.0]) {
        assert!((got - want).abs() < 1e-12, "{q:?}");
    }
    // Independent check: the quartic stays positive on a fine grid.
    let min = (1..=30_000)
        .map(|k| k as f64 * 1e-4)
        .map(|v| q.iter().fold(0.0, |acc, c| acc * v + c))
        .fold(f64::INFINITY, f64::min);
    assert!(min > 0.0);
    assert!(classical_droop_equilibria(&p).is_empty());
    let set = equilibria(&p).unwrap();
    assert!(!set.points.is_empty());
    assert!(set.points.iter().all(|e| e.residual <= 1e-10));
}

#[test]
fn classical_droop_recovers_nominal_operation() {
    let p = ParamSpec { r_g: 0.01, l_g_pu: 0.05, v_g: 1.0, phi: FRAC_PI_2, ..ParamSpec::standard() }.build().unwrap();
    let pts = classical_droop_equilibria(&p);
    assert!(pts.iter().any(|e| (e.v_s - 1.0).abs() < 1e-9 && e.delta_s.sin().abs() < 1e-9));
}

#[test]
fn classical_and_complex_droop_agree_near_nominal_voltage() {
    for spec in [dip_case(0.02), ParamSpec { phi: FRAC_PI_4, ..dip_case(0.02) }] {
        let p = spec.build().unwrap();
        let complex = equilibria(&p).unwrap().points[0].v_s;
        let classical = classical_droop_equilibria(&p);
        let nearest = classical.iter().map(|e| (e.v_s - complex).abs()).fold(f64::INFINITY, f64::min);
        assert!((complex - 1.0).abs() < 0.1);
        assert!(nearest < 0.05, "complex {complex}, classical {classical:?}");
    }
}

#[test]
fn full_order_lift_structure() {
    let p = dip_case(0.02).build().unwrap().with_grid_voltage(0.5).unwrap();
    let eq = equilibria(&p).unwrap().points[0];
    let x = full_order_equilibrium(&eq, &p);
    assert_eq!(x.vhat(), eq.v());
    assert_eq!(x.pair(2), eq.v());
    assert_eq!(x.as_slice()[6..8], [0.0, 0.0]);
    assert_eq!(x.as_slice()[10..12], [0.0, 0.0]);
}

#[test]
fn positive_quadratic_coefficient_forces_uniqueness() {
    // b > 0 needs σφ* + α < |y| cos φ̃: a stiff grid with modest droop.
    let p = ParamSpec { r_g: 0.02, l_g_pu: 0.1, phi: 1.37, alpha: 0.5, ..ParamSpec::standard() }.build().unwrap();
    let k = cubic_coefficients(&p).unwrap();
    assert!(k.b > 0.0);
    assert!(k.delta < 0.0);
    assert_eq!(equilibria(&p).unwrap().points.len(), 1);
}
