use nalgebra::Vector2;
use rayon::prelude::*;
use serde::Serialize;

use super::{classify, Outcome, Thresholds};
use crate::certify::{perturbation_coefficients, voltage_bound, C1_SUPREMUM_FRACTION};
use crate::equilibrium::{equilibria, Uniqueness};
use crate::model::{lift_to, Model, ModelOrder, SystemParams};
use crate::sim::{integrate, Event, IntegratorConfig};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Analytic,
    Empirical,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub model_order: ModelOrder,
    /// Grid voltage after the dip (pu); the template holds the pre-dip value.
    pub dip_voltage: f64,
    /// Simulated time after the dip (s).
    pub horizon: f64,
    pub sample_interval: f64,
    /// Bisection bracket for η (rad/s).
    pub eta_min: f64,
    pub eta_max: f64,
    /// Bisection stops once the bracket is narrower than this (rad/s).
    pub eta_tol: f64,
    /// ε used by the analytic bound; (21b) loosens as ε decreases toward 3.
    pub analytic_epsilon: f64,
    pub max_iterations: usize,
    pub thresholds: Thresholds,
}

impl SweepConfig {
    pub fn new(mode: SweepMode, omega0: f64) -> Self {
        Self {
            mode,
            model_order: ModelOrder::Fourth,
            dip_voltage: crate::cases::DIP_VOLTAGE,
            horizon: 15.0,
            sample_interval: 1e-3,
            eta_min: 0.005 * omega0,
            eta_max: 0.3 * omega0,
            eta_tol: 1e-3 * omega0,
            analytic_epsilon: 3.0 + 1e-6,
            max_iterations: 100,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub alphas: Vec<f64>,
    /// `None` marks an invalid point (no unique equilibrium, empty condition
    /// set or fixed-point non-convergence).
    pub eta_analytic: Vec<Option<f64>>,
    /// `None` when even the lower bracket fails; equals the upper bracket
    /// when it still converges there.
    pub eta_empirical: Vec<Option<f64>>,
    pub model_order: ModelOrder,
}

/// Largest η meeting conditions (a) and (b) of the full-order certificate
/// for the post-dip grid. The bound on η depends on η itself through the
/// detuning, so it is resolved by fixed-point iteration.
pub fn analytic_eta_bound(template: &SystemParams, alpha: f64, cfg: &SweepConfig) -> Option<f64> {
    let base = template.modified(|s| {
        s.alpha = alpha;
        s.v_g = cfg.dip_voltage;
    });
    let base = base.ok()?;
    let mut eta = base.ctrl.eta;
    for _ in 0..cfg.max_iterations {
        let p = base.modified(|s| s.eta = eta).ok()?;
        let set = equilibria(&p).ok()?;
        if set.unique != Uniqueness::Unique || set.points.len() != 1 {
            return None;
        }
        let k = perturbation_coefficients(&p, cfg.analytic_epsilon, &set.points[0]).ok()?;
        if k.alpha_1 <= 0.0 {
            return None;
        }
        let c1 = C1_SUPREMUM_FRACTION * k.alpha_1;
        let next = c1 / ((p.grid.l_g / p.grid.r_g) * p.grid.y.norm() * (c1 + k.c_eps));
        if !(next > 0.0 && next.is_finite()) {
            return None;
        }
        if (next - eta).abs() <= 1e-10 * eta.abs().max(1.0) {
            return Some(next);
        }
        eta = next;
    }
    None
}

/// Dip scenario at gain `eta`: initial state is the pre-dip equilibrium of
/// `model`, and the grid voltage steps to `dip_voltage` at t = 0.
/// Returns the parameter set, initial state, event and post-dip equilibria.
pub fn dip_scenario(
    template: &SystemParams,
    alpha: f64,
    eta: f64,
    cfg: &SweepConfig,
) -> Result<(SystemParams, crate::model::StateVector, Event, Vec<Vector2<f64>>)> {
    let p = template.modified(|s| {
        s.alpha = alpha;
        s.eta = eta;
    })?;
    let pre = equilibria(&p)?;
    let start = pre.points.first().ok_or(crate::Error::Degenerate("no pre-dip equilibrium"))?;
    let x0 = lift_to(&start.state(), cfg.model_order, &p);
    let post = equilibria(&p.with_grid_voltage(cfg.dip_voltage)?)?;
    let targets = post.points.iter().map(|e| e.v()).collect();
    Ok((p, x0, Event::grid_voltage(0.0, cfg.dip_voltage), targets))
}

fn dip_outcome(template: &SystemParams, alpha: f64, eta: f64, cfg: &SweepConfig) -> Result<Outcome> {
    let (p, x0, event, targets) = dip_scenario(template, alpha, eta, cfg)?;
    let post = event.apply(&p)?;
    let v_m = voltage_bound(&post).ok();
    let mut th = cfg.thresholds;
    th.v_m = v_m;
    let mut ic = IntegratorConfig::new(cfg.horizon, cfg.sample_interval);
    ic.escape_norm = v_m.map(|v| th.diverge_factor * v);
    let traj = integrate(Model::Reduced(cfg.model_order), &p, &x0, &[event], &ic)?;
    Ok(classify(&traj, &targets, &th))
}

/// Bisection on η with the dip-scenario classification as oracle.
pub fn empirical_eta_bound(template: &SystemParams, alpha: f64, cfg: &SweepConfig) -> Option<f64> {
    let stable = |eta: f64| dip_outcome(template, alpha, eta, cfg).map(|o| o.is_converged()).unwrap_or(false);
    let (mut lo, mut hi) = (cfg.eta_min, cfg.eta_max);
    if !stable(lo) {
        return None;
    }
    if stable(hi) {
        return Some(hi);
    }
    while hi - lo > cfg.eta_tol {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Stability boundary in the (α, η) plane. Grid points run in parallel and
/// results keep the order of `alphas`.
pub fn boundary_sweep(template: &SystemParams, alphas: &[f64], cfg: &SweepConfig) -> Result<BoundaryCurve> {
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0)) {
        return Err(crate::Error::InvalidParameter { field: "alpha", reason: format!("grid value {a} must be > 0") });
    }
    let analytic = matches!(cfg.mode, SweepMode::Analytic | SweepMode::Both);
    let empirical = matches!(cfg.mode, SweepMode::Empirical | SweepMode::Both);
    let rows: Vec<(Option<f64>, Option<f64>)> = alphas
        .par_iter()
        .map(|&a| {
            let an = if analytic { analytic_eta_bound(template, a, cfg) } else { None };
            let em = if empirical { empirical_eta_bound(template, a, cfg) } else { None };
            (an, em)
        })
        .collect();
    Ok(BoundaryCurve {
        alphas: alphas.to_vec(),
        eta_analytic: rows.iter().map(|r| r.0).collect(),
        eta_empirical: rows.iter().map(|r| r.1).collect(),
        model_order: cfg.model_order,
    })
}
