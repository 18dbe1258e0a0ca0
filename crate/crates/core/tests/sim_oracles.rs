//! Integrator behaviour against convergence-order, equilibrium and
//! closed-form oracles.

use dvoc_core::cases::{dip_case, resistive_grid_case, DIP_VOLTAGE};
use dvoc_core::certify::{check_global_no_eq, voltage_bound};
use dvoc_core::equilibrium::{equilibria, full_order_equilibrium};
use dvoc_core::model::{lift_to, Model, ModelOrder, StateVector, SystemParams};
use dvoc_core::sim::{
    deviation_norms, error_coordinates, integrate, lyapunov_trace, Event, EventChange, IntegratorConfig, Status,
};
use dvoc_core::Error;
use nalgebra::Vector2;

fn second(v: Vector2<f64>) -> StateVector {
    StateVector::new(ModelOrder::Second, &[v.x, v.y]).unwrap()
}

/// Pre-dip parameters, their equilibrium as a second-order state, and the dip event at t = 0.
fn dip_start(eta_pu: f64) -> (SystemParams, StateVector, Event) {
    let p = dip_case(eta_pu).build().unwrap();
    let eq = equilibria(&p).unwrap().points[0];
    (p, second(eq.v()), Event::grid_voltage(0.0, DIP_VOLTAGE))
}

#[test]
fn second_order_dip_settles_at_post_dip_equilibrium() {
    let (p, x0, dip) = dip_start(0.02);
    let post = equilibria(&p.with_grid_voltage(DIP_VOLTAGE).unwrap()).unwrap().points[0];
    let traj =
        integrate(Model::Reduced(ModelOrder::Second), &p, &x0, &[dip], &IntegratorConfig::new(2.0, 1e-3)).unwrap();
    assert!(traj.completed());
    assert!((traj.last_state().vhat() - post.v()).norm() < 1e-4);
    assert_eq!(traj.segment[0], 1, "event at t = 0 applies before the first sample");
}

#[test]
fn full_order_equilibrium_is_stationary() {
    let p = dip_case(0.02).build().unwrap();
    let x0 = full_order_equilibrium(&equilibria(&p).unwrap().points[0], &p);
    let traj = integrate(Model::Reduced(ModelOrder::Full), &p, &x0, &[], &IntegratorConfig::new(1.0, 1e-2)).unwrap();
    let drift = traj.states.iter().map(|x| x.max_abs_diff(&x0)).fold(0.0, f64::max);
    assert!(drift < 1e-8, "{drift}");
    let y = error_coordinates(&traj).unwrap();
    assert!(y.y2[0] < 1e-12 && y.y3[0] < 1e-12 && y.y4[0] < 1e-12);
}

#[test]
fn rk4_global_error_is_fourth_order() {
    // Limit-cycle run: the state keeps moving, so the error does not decay away.
    let p = resistive_grid_case(3.0).build().unwrap();
    let x0 = second(Vector2::new(0.3, 0.0));
    let run = |h: f64| {
        integrate(Model::Reduced(ModelOrder::Second), &p, &x0, &[], &IntegratorConfig::rk4(h, 0.5, 0.5))
            .unwrap()
            .last_state()
            .vhat()
    };
    let (coarse, mid, fine) = (run(1e-3), run(5e-4), run(2.5e-4));
    let ratio = (coarse - mid).norm() / (mid - fine).norm();
    assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
}

#[test]
fn adaptive_and_fixed_step_agree() {
    let (p, x0, dip) = dip_start(0.02);
    let model = Model::Reduced(ModelOrder::Second);
    let a = integrate(model, &p, &x0, &[dip], &IntegratorConfig::new(2.0, 1e-2)).unwrap();
    let b = integrate(model, &p, &x0, &[dip], &IntegratorConfig::rk4(1e-4, 2.0, 1e-2)).unwrap();
    assert_eq!(a.times, b.times);
    let sup = a.states.iter().zip(&b.states).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max);
    assert!(sup < 1e-5, "{sup}");
}

#[test]
fn integration_is_deterministic() {
    let p = dip_case(0.02).build().unwrap();
    let x0 = lift_to(&second(equilibria(&p).unwrap().points[0].v()), ModelOrder::Fourth, &p);
    let events = [Event::grid_voltage(0.1, DIP_VOLTAGE)];
    let cfg = IntegratorConfig::new(0.5, 1e-3);
    let a = integrate(Model::Reduced(ModelOrder::Fourth), &p, &x0, &events, &cfg).unwrap();
    let b = integrate(Model::Reduced(ModelOrder::Fourth), &p, &x0, &events, &cfg).unwrap();
    assert_eq!(a.times, b.times);
    for (x, y) in a.states.iter().zip(&b.states) {
        assert_eq!(x.as_slice(), y.as_slice());
    }
}

#[test]
fn samples_fall_on_the_grid_and_events_are_recorded() {
    let (p, x0, _) = dip_start(0.02);
    let events = [
        Event::grid_voltage(0.25, DIP_VOLTAGE),
        Event { time: 0.6, change: EventChange::GridFrequency { omega_g: 1.001 } },
    ];
    let traj =
        integrate(Model::Reduced(ModelOrder::Second), &p, &x0, &events, &IntegratorConfig::new(1.0, 0.1)).unwrap();
    assert_eq!(traj.len(), 11);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(traj.events.len(), 2);
    assert_eq!(traj.segment, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2]);
    assert_eq!(traj.params_at(10).grid.omega_g, 1.001);
}

#[test]
fn invalid_events_and_configs_are_rejected() {
    let (p, x0, _) = dip_start(0.02);
    let model = Model::Reduced(ModelOrder::Second);
    let cfg = IntegratorConfig::new(1.0, 0.1);
    let late = [Event::grid_voltage(2.0, 0.5)];
    assert!(matches!(integrate(model, &p, &x0, &late, &cfg), Err(Error::Config(_))));
    let unordered = [Event::grid_voltage(0.5, 0.5), Event::grid_voltage(0.2, 0.6)];
    assert!(matches!(integrate(model, &p, &x0, &unordered, &cfg), Err(Error::Config(_))));
    assert!(integrate(model, &p, &x0, &[], &IntegratorConfig::new(0.0, 0.1)).is_err());
    assert!(integrate(model, &p, &x0, &[], &IntegratorConfig::rk4(-1.0, 1.0, 0.1)).is_err());
    let wrong_order = StateVector::zeros(ModelOrder::Fourth);
    assert!(integrate(model, &p, &wrong_order, &[], &cfg).is_err());
}

#[test]
fn lyapunov_value_decreases_under_the_global_condition() {
    let (p, x0, dip) = dip_start(0.02);
    let post = p.with_grid_voltage(DIP_VOLTAGE).unwrap();
    assert!(check_global_no_eq(&post).satisfied);
    let v_s = equilibria(&post).unwrap().points[0].v();
    let traj =
        integrate(Model::Reduced(ModelOrder::Second), &p, &x0, &[dip], &IntegratorConfig::new(2.0, 1e-3)).unwrap();
    assert!(lyapunov_trace(&traj, v_s).unwrap().monotone());

    let still =
        integrate(Model::Reduced(ModelOrder::Second), &post, &second(v_s), &[], &IntegratorConfig::new(0.5, 0.1))
            .unwrap();
    assert!(lyapunov_trace(&still, v_s).unwrap().values.iter().all(|v| *v < 1e-20));
}

#[test]
fn lyapunov_value_oscillates_on_a_limit_cycle() {
    let p = resistive_grid_case(3.0).build().unwrap();
    let v_s = equilibria(&p).unwrap().points[0].v();
    let traj = integrate(
        Model::Reduced(ModelOrder::Second),
        &p,
        &second(v_s + Vector2::new(0.05, 0.0)),
        &[],
        &IntegratorConfig::new(5.0, 1e-3),
    )
    .unwrap();
    assert!(!lyapunov_trace(&traj, v_s).unwrap().monotone());
}

#[test]
fn voltage_bound_is_forward_invariant() {
    let p = resistive_grid_case(3.0).build().unwrap();
    let v_m = voltage_bound(&p).unwrap();
    for start in [Vector2::new(0.01, 0.0), Vector2::new(0.7, -0.7), Vector2::new(-1.5, 1.2)] {
        let traj =
            integrate(Model::Reduced(ModelOrder::Second), &p, &second(start), &[], &IntegratorConfig::new(5.0, 1e-3))
                .unwrap();
        let norms = deviation_norms(&traj, Vector2::zeros());
        if let Some(entry) = norms.iter().position(|n| *n <= v_m) {
            assert!(norms[entry..].iter().all(|n| *n <= v_m + 1e-6), "start {start}");
        } else {
            panic!("trajectory from {start} never entered the bound");
        }
    }
}

#[test]
fn escape_norm_stops_a_runaway() {
    let p = resistive_grid_case(3.0).build().unwrap();
    let mut cfg = IntegratorConfig::new(5.0, 1e-3);
    cfg.escape_norm = Some(0.5);
    let traj = integrate(Model::Reduced(ModelOrder::Second), &p, &second(Vector2::new(0.9, 0.0)), &[], &cfg).unwrap();
    assert!(matches!(traj.status, Status::Escaped { t } if t <= 1e-3 + 1e-12));
    assert!(!traj.completed());
}
