//! Stability and instability conditions against direct arithmetic,
//! eigenvalue and finite-difference oracles.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use dvoc_core::cases::{deep_dip_case, dip_case, islanded_case, resistive_grid_case};
use dvoc_core::certify::{
    check_full_order, check_global, check_global_no_eq, check_local, check_unstable, check_voltage_following,
    composite_matrix, epsilon_range, jacobian, kappa, off_grid_classification, off_grid_radial_rate,
    perturbation_coefficients, roa_radius, scr_theta, spectral_abscissa, voltage_bound, OffGridOutcome,
    C1_DEFAULT_FRACTION,
};
use dvoc_core::equilibrium::equilibria;
use dvoc_core::model::{rhs_second_order, ModelOrder, ParamSpec, StateVector, SystemParams};
use dvoc_core::Error;
use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;

fn post_dip(eta_pu: f64) -> SystemParams {
    dip_case(eta_pu).build().unwrap().with_grid_voltage(0.5).unwrap()
}

#[test]
fn kappa_examples() {
    // Setpoint equal to the grid admittance cancels.
    let base = ParamSpec { r_g: 0.3, l_g_pu: 0.4, phi: 0.7, ..ParamSpec::standard() };
    let y = Complex64::new(0.3, 0.4).inv();
    let p = ParamSpec { p_star: y.re, q_star: -y.im, ..base }.build().unwrap();
    let k = kappa(&p);
    assert!(k.kappa_r.abs() < 1e-14 && k.kappa_i.abs() < 1e-14);

    let k = kappa(&resistive_grid_case(3.0).build().unwrap());
    assert!((k.kappa_r - (-0.4596194077712558)).abs() < 1e-12);
    assert!((k.kappa_r - (0.4243 - 0.8839)).abs() < 1e-4);

    let k = kappa(&deep_dip_case().build().unwrap());
    assert!((k.kappa_r + 1.25).abs() < 1e-12);
}

#[test]
fn global_condition_examples() {
    let p = deep_dip_case().build().unwrap();
    let set = equilibria(&p).unwrap();
    let g = check_global(&p, &set).unwrap();
    assert!(g.satisfied);
    let v_s = set.points[0].v_s;
    assert!((g.margin - (0.5 * v_s * v_s + 1.25 - 1.0)).abs() < 1e-12);

    let p = resistive_grid_case(3.0).build().unwrap();
    assert!(!check_global(&p, &equilibria(&p).unwrap()).unwrap().satisfied);

    let margin = check_global_no_eq(&dip_case(0.02).build().unwrap()).margin;
    assert!((margin - 3.270992778072192).abs() < 1e-12);

    // Zero setpoint, zero α, rotation matched to the impedance: margin is 1/|z|.
    let p = ParamSpec { alpha: 0.0, ..dip_case(0.02) }.modified_setpoints(0.0, 0.0);
    let c = check_global_no_eq(&p);
    assert!(c.satisfied && (c.margin - 1.0 / 0.08_f64.hypot(0.2)).abs() < 1e-12);
}

trait Setpoints {
    fn modified_setpoints(self, p_star: f64, q_star: f64) -> SystemParams;
}

impl Setpoints for ParamSpec {
    fn modified_setpoints(self, p_star: f64, q_star: f64) -> SystemParams {
        ParamSpec { p_star, q_star, ..self }.build().unwrap()
    }
}

#[test]
fn global_condition_refuses_multiple_equilibria() {
    // Strong amplitude droop on the sagged grid yields three steady states.
    let p = post_dip(0.02).modified(|s| s.alpha = 20.0).unwrap();
    let set = equilibria(&p).unwrap();
    assert_eq!(set.points.len(), 3);
    assert!(matches!(check_global(&p, &set), Err(Error::TheoremInapplicable(_))));
    assert!(matches!(epsilon_range(&p), Err(Error::TheoremInapplicable(_))));
}

#[test]
fn jacobian_matches_finite_differences() {
    for p in [dip_case(0.02).build().unwrap(), resistive_grid_case(3.0).build().unwrap(), post_dip(0.06)] {
        let p = p.with_grid_frequency(0.995).unwrap();
        let eq = equilibria(&p).unwrap().points[0];
        let a = jacobian(&p, &eq);
        let f = |v: Vector2<f64>| {
            rhs_second_order(&StateVector::new(ModelOrder::Second, &[v.x, v.y]).unwrap(), &p).unwrap().vhat()
        };
        let h = 1e-6;
        let v = eq.v();
        let jx = (f(v + Vector2::new(h, 0.0)) - f(v - Vector2::new(h, 0.0))) / (2.0 * h);
        let jy = (f(v + Vector2::new(0.0, h)) - f(v - Vector2::new(0.0, h))) / (2.0 * h);
        let fd = Matrix2::from_columns(&[jx, jy]);
        assert!((a - fd).amax() <= 1e-6 * a.amax(), "{a} vs {fd}");
    }
}

#[test]
fn voltage_following_jacobian_is_the_linear_map() {
    let p = dip_case(0.02).build().unwrap().modified(|s| {
        s.alpha = 0.0;
        s.omega_g = 1.01;
    });
    let p = p.unwrap();
    let c = &p.ctrl;
    let want = c.omega_delta * Matrix2::new(0.0, -1.0, 1.0, 0.0) + c.eta * (c.s_phi_star - p.y_phi());
    let a = dvoc_core::model::jacobian_second_order(&p, Vector2::new(0.4, -0.9));
    assert!((a - want).amax() < 1e-12);
}

#[test]
fn resistive_grid_equilibrium_is_unstable() {
    let p = resistive_grid_case(3.0).build().unwrap();
    let eq = equilibria(&p).unwrap().points[0];
    let local = check_local(&p, &eq);
    assert!(!local.sufficient.satisfied);
    assert!(!local.hurwitz);
    assert!(local.spectral_abscissa > 0.0);
    assert!(check_unstable(&p, &eq).any());
}

#[test]
fn stable_equilibrium_meets_no_instability_condition() {
    let p = deep_dip_case().build().unwrap();
    let set = equilibria(&p).unwrap();
    assert!(check_global(&p, &set).unwrap().satisfied);
    let u = check_unstable(&p, &set.points[0]);
    assert!(!u.a.satisfied && !u.b.satisfied);
    assert!(check_local(&p, &set.points[0]).hurwitz);
}

#[test]
fn voltage_bound_examples() {
    let vm = voltage_bound(&resistive_grid_case(3.0).build().unwrap()).unwrap();
    assert!((vm - 1.0683732289033216).abs() < 1e-12);
    assert!((vm - 1.0684).abs() < 1e-4);

    // Zero setpoint with matched rotation gives κ_r = −|y|.
    let spec = ParamSpec { v_g: 0.5, ..dip_case(0.02) };
    let p = ParamSpec { p_star: 0.0, q_star: 0.0, ..spec }.build().unwrap();
    assert!((kappa(&p).kappa_r + p.grid.y.norm()).abs() < 1e-12);
    assert!((voltage_bound(&p).unwrap() - 1.0).abs() < 1e-12);

    let p = p.modified(|s| s.alpha = 0.0).unwrap();
    assert!(matches!(voltage_bound(&p), Err(Error::Degenerate(_))));
}

#[test]
fn scr_examples() {
    assert!((scr_theta(Complex64::new(0.0, -5.0), FRAC_PI_2) - 5.0).abs() < 1e-12);
    assert!((scr_theta(Complex64::new(1.0, -1.0), 0.0) - 1.0).abs() < 1e-12);
    let want = 0.6 * FRAC_PI_4.cos() + 0.8 * FRAC_PI_4.sin();
    assert!((scr_theta(Complex64::new(0.6, -0.8), FRAC_PI_4) - want).abs() < 1e-12);
    assert!((want - 0.9899).abs() < 1e-4);
}

#[test]
fn voltage_following_mode() {
    let p = ParamSpec { alpha: 0.0, ..ParamSpec::standard() }.build().unwrap();
    let vf = check_voltage_following(&p).unwrap();
    assert!(vf.stable.satisfied && vf.hurwitz);

    // Boundary: with φ = π/2 the setpoint term is q* and the grid term x/|z|².
    let (r, x) = (0.1, 0.3);
    let p = ParamSpec { alpha: 0.0, r_g: r, l_g_pu: x, q_star: x / (r * r + x * x), ..ParamSpec::standard() }
        .build()
        .unwrap();
    let vf = check_voltage_following(&p).unwrap();
    assert!(!vf.stable.satisfied);
    assert!(vf.spectral_abscissa.abs() < 1e-12);

    assert!(matches!(check_voltage_following(&ParamSpec::standard().build().unwrap()), Err(Error::Precondition(_))));
}

#[test]
fn off_grid_branches() {
    let equality = islanded_case(1.0).build().unwrap();
    assert_eq!(off_grid_classification(&equality).unwrap(), OffGridOutcome::OriginGas);
    let cycle = islanded_case(2.0).build().unwrap();
    match off_grid_classification(&cycle).unwrap() {
        OffGridOutcome::LimitCycle { amplitude_sq } => {
            assert!((amplitude_sq - 0.5).abs() < 1e-12);
            for k in 0..8 {
                let th = k as f64;
                let v = Vector2::new(th.cos(), th.sin()) * amplitude_sq.sqrt();
                assert!(off_grid_radial_rate(&cycle, v).abs() < 1e-12);
            }
        }
        other => panic!("expected a limit cycle, got {other:?}"),
    }
    assert!(off_grid_classification(&dip_case(0.02).build().unwrap()).is_err());
}

#[test]
fn perturbation_coefficient_formulas() {
    let p = post_dip(0.02);
    let eq = equilibria(&p).unwrap().points[0];
    let eps = 5.0;
    let k = perturbation_coefficients(&p, eps, &eq).unwrap();
    let c = &p.ctrl;
    let rot = Complex64::from_polar(1.0, c.phi);
    let shifted = (rot * (c.sigma_bar_star - p.grid.y) + c.alpha).norm();
    let c_eps = shifted + c.alpha * eps * eq.v_s * eq.v_s / c.v_star.powi(2);
    assert!((k.c_eps - c_eps).abs() < 1e-12 * c_eps);
    let mu_2 = 1.0 / (c_eps * c.eta * (p.grid.l_g / p.grid.r_g) * p.grid.y.norm());
    assert!((k.mu[1] - mu_2).abs() < 1e-12 * mu_2);
    assert_eq!(k.mu[0], 1.0);
    assert_eq!(k.gamma_3, 0.0);
    let kr = kappa(&p).kappa_r;
    assert!((k.alpha_1 - (-kr - c.alpha + 0.5 * c.alpha * eq.v_s * eq.v_s)).abs() < 1e-12);
    assert!((k.alpha_3 - (1.0 - p.filt.c_f / p.filt.k_rv)).abs() < 1e-15);
    assert!((k.alpha_4 - (1.0 - p.filt.l_f / p.filt.k_rc)).abs() < 1e-15);
    assert!((k.beta_23 - 1.0 / p.grid.r_g).abs() < 1e-12);
    assert!((k.beta_34 - 1.1).abs() < 1e-15);
    assert!((k.c_v - (p.filt.c_f / 1.0 + p.filt.c_f / 10.0)).abs() < 1e-15);
    assert!((k.c_c - (p.filt.l_f / 2.0 + p.filt.l_f / 20.0)).abs() < 1e-15);
    let all = [
        k.alpha_1, k.alpha_2, k.alpha_3, k.alpha_4, k.beta_12, k.beta_23, k.beta_34, k.beta_21, k.beta_31, k.beta_32,
        k.beta_41, k.beta_42, k.beta_43, k.gamma_2, k.gamma_4, k.mu[1], k.mu[2], k.mu[3],
    ];
    assert!(all.iter().all(|v| v.is_finite() && *v > 0.0), "{k:?}");
}

#[test]
fn perturbation_preconditions_are_named() {
    let eq = equilibria(&post_dip(0.02)).unwrap().points[0];
    let detuned = post_dip(0.02).with_grid_frequency(1.01).unwrap();
    let lossless = post_dip(0.02).modified(|s| s.r_g = 0.0).unwrap();
    let weak_loop = post_dip(0.02).modified(|s| s.k_rv = 1e-6).unwrap();
    for p in [detuned, lossless, weak_loop] {
        assert!(matches!(perturbation_coefficients(&p, 5.0, &eq), Err(Error::Precondition(_))));
    }
    assert!(matches!(perturbation_coefficients(&post_dip(0.02), 3.0, &eq), Err(Error::NoNeighborhood(_))));
}

#[test]
fn composite_matrix_without_coupling_is_diagonal() {
    let p = post_dip(0.02);
    let eq = equilibria(&p).unwrap().points[0];
    let mut k = perturbation_coefficients(&p, 5.0, &eq).unwrap();
    k.beta_21 = 0.0;
    k.beta_31 = 0.0;
    k.beta_32 = 0.0;
    k.beta_41 = 0.0;
    k.beta_42 = 0.0;
    k.beta_43 = 0.0;
    k.gamma_2 = 0.1;
    k.gamma_4 = 0.2;
    k.mu = [1.0, 2.0, 3.0, 4.0];
    let c1 = 0.5 * k.alpha_1;
    let m = composite_matrix(&k, c1);
    let want = [k.alpha_1, 2.0 * (k.alpha_2 - 0.1), 3.0 * k.alpha_3, 4.0 * (k.alpha_4 - 0.2)];
    for (i, diagonal) in want.iter().enumerate() {
        for j in 0..4 {
            let expect = if i == j { *diagonal } else { 0.0 };
            assert!((m.m[(i, j)] - expect).abs() < 1e-14);
        }
    }
}

#[test]
fn composite_matrix_is_symmetric_and_consistent_with_conditions() {
    let p = post_dip(0.02);
    let cert = check_full_order(&p, 5.0, C1_DEFAULT_FRACTION).unwrap();
    let m = cert.composite.m;
    assert!((m - m.transpose()).amax() == 0.0);
    let eig = SymmetricEigen::new(m).eigenvalues;
    assert!(eig.iter().all(|v| v.is_finite()));
    // (d) fails at the nominal current-loop gains.
    assert!(!cert.cond_d.satisfied && cert.cond_d.margin < 0.0);
    assert!(!cert.all());
}

#[test]
fn all_four_conditions_imply_positive_definite_composite() {
    let mut checked = 0;
    for eta in [0.002, 0.005, 0.01] {
        for eps in [3.5, 5.0] {
            for (kpc, krc) in [(1e6, 1e12), (1e7, 1e14)] {
                let p = dip_case(eta).modified_gains(kpc, krc);
                let cert = check_full_order(&p, eps, 0.9).unwrap();
                if cert.all() {
                    checked += 1;
                    assert!(cert.m_positive_definite, "eta {eta} eps {eps} kpc {kpc}");
                }
            }
        }
    }
    assert!(checked >= 6, "{checked}");
}

#[test]
fn positive_definite_composite_does_not_imply_condition_d() {
    let p = dip_case(0.005).modified_gains(100.0, 1e5);
    let cert = check_full_order(&p, 5.0, 0.9).unwrap();
    assert!(cert.m_positive_definite);
    assert!(!cert.cond_d.satisfied);
}

trait Gains {
    fn modified_gains(self, k_pc: f64, k_rc: f64) -> SystemParams;
}

impl Gains for ParamSpec {
    fn modified_gains(self, k_pc: f64, k_rc: f64) -> SystemParams {
        ParamSpec { k_pc, k_rc, v_g: 0.5, ..self }.build().unwrap()
    }
}

#[test]
fn gain_above_bound_fails_condition_b() {
    let cert = check_full_order(&post_dip(0.3), 5.0, C1_DEFAULT_FRACTION).unwrap();
    assert!(!cert.cond_b.satisfied && cert.cond_b.margin < 0.0);
}

#[test]
fn roa_radius_examples() {
    assert!((roa_radius(7.0, 1.0).unwrap() - 1.0).abs() < 1e-10);
    assert!((roa_radius(7.0, 0.5).unwrap() - 0.5).abs() < 1e-10);
    assert!(matches!(roa_radius(3.0, 1.0), Err(Error::NoNeighborhood(_))));
    assert!(roa_radius(2.0, 1.0).is_err());
    let (a, b, c) = (roa_radius(3.5, 0.8).unwrap(), roa_radius(5.0, 0.8).unwrap(), roa_radius(11.4, 0.8).unwrap());
    assert!(a < b && b < c);
    // The radius solves the defining equation.
    let s = roa_radius(11.4, 1.0).unwrap();
    assert!((((1.0 + s).powi(3) - 1.0) / s - 11.4).abs() < 1e-9);
}

#[test]
fn epsilon_range_examples() {
    let r = epsilon_range(&post_dip(0.02)).unwrap().expect("non-empty range");
    assert_eq!(r.lower, 3.0);
    assert!((r.upper - 11.4).abs() <= 0.2, "{r:?}");
    assert!(!r.capped);

    // A larger gain tightens condition (b).
    let faster = epsilon_range(&post_dip(0.06)).unwrap();
    assert!(faster.is_none_or(|f| f.upper < r.upper));

    let huge_alpha = post_dip(0.02).modified(|s| s.alpha = 5.0).unwrap();
    assert!(epsilon_range(&huge_alpha).unwrap().is_none());
}

#[test]
fn spectral_abscissa_of_known_matrices() {
    assert_eq!(spectral_abscissa(&Matrix2::new(-1.0, 0.0, 0.0, 2.0)), 2.0);
    assert!((spectral_abscissa(&Matrix2::new(-1.0, -3.0, 3.0, -1.0)) + 1.0).abs() < 1e-15);
}
