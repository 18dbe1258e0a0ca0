//! Scenario execution and artifact writing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use dvoc_core::analysis::{
    bound_violations_after_entry, boundary_sweep, classify, phase_portrait, Outcome, PortraitEntry, Thresholds,
};
use dvoc_core::certify::voltage_bound;
use dvoc_core::equilibrium::equilibria;
use dvoc_core::model::lift_to;
use dvoc_core::sim::{
    deviation_norms, error_coordinates, final_params, integrate, time_to_fraction, Status, Trajectory,
};
use dvoc_core::suite::{property_suite, SuiteReport};
use dvoc_core::{Model, ModelOrder, StateVector};
use nalgebra::Vector2;
use serde::Serialize;
use thiserror::Error;

use crate::report::{certificate_report, CertificateReport, SCHEMA_VERSION};
use crate::scenario::{InitialState, NamedStart, Plan, ScenarioError, SimPlan};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("scenario error: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl From<dvoc_core::Error> for RunError {
    fn from(e: dvoc_core::Error) -> Self {
        RunError::Numerical(e.to_string())
    }
}

/// Time for each error signal to fall below 10% of its post-event maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayTimes {
    pub from: f64,
    pub dvoc: Option<f64>,
    pub y2: Option<f64>,
    pub y3: Option<f64>,
    pub y4: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub model: Model,
    pub status: Status,
    pub samples: usize,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub outcome: Outcome,
    pub max_voltage: f64,
    pub v_m: Option<f64>,
    /// Samples above `v_m` after first entering it (second order only).
    pub bound_violations: Option<usize>,
    pub time_to_10_percent: Option<DecayTimes>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySummary {
    pub model_order: ModelOrder,
    pub alphas: Vec<f64>,
    /// Multiples of ω0.
    pub eta_analytic: Vec<Option<f64>>,
    pub eta_empirical: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitRow {
    pub initial: [f64; 2],
    pub outcome: &'static str,
    pub period: Option<f64>,
    pub mean_radius: Option<f64>,
    pub final_error: Option<f64>,
    pub max_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitSummary {
    pub counts: BTreeMap<&'static str, usize>,
    pub v_m: Option<f64>,
    pub max_norm: f64,
    pub entries: Vec<PortraitRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub scenario: String,
    pub simulation: Option<SimulationSummary>,
    pub boundary: Option<BoundarySummary>,
    pub portrait: Option<PortraitSummary>,
    pub property_suite: Option<SuiteReport>,
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub report: CertificateReport,
    pub analysis: AnalysisReport,
    pub trajectory_csv: Option<String>,
    pub portrait_csv: Option<String>,
    /// Set when the integration stopped early for numerical reasons.
    pub failure: Option<String>,
}

fn initial_state(plan: &Plan, sim: &SimPlan) -> Result<StateVector, RunError> {
    let p = &plan.params;
    let order = sim.model.order();
    let planar = match sim.initial {
        InitialState::Named(NamedStart::Equilibrium) => {
            let set = equilibria(p)?;
            set.points.first().ok_or_else(|| RunError::Numerical("no initial equilibrium".into()))?.v()
        }
        InitialState::Named(NamedStart::Grid) => Vector2::new(p.grid.v_g, 0.0),
        InitialState::Point([d, q]) => Vector2::new(d, q),
    };
    let x2 = StateVector::new(ModelOrder::Second, &[planar.x, planar.y])?;
    Ok(if order == ModelOrder::Second { x2 } else { lift_to(&x2, order, p) })
}

fn decay_times(traj: &Trajectory, target: Vector2<f64>, from: f64) -> Option<DecayTimes> {
    let y = error_coordinates(traj).ok()?;
    let t = |v: &[f64]| time_to_fraction(&traj.times, v, from, 0.1);
    Some(DecayTimes { from, dvoc: t(&deviation_norms(traj, target)), y2: t(&y.y2), y3: t(&y.y3), y4: t(&y.y4) })
}

fn simulate(plan: &Plan, sim: &SimPlan) -> Result<(SimulationSummary, Trajectory), RunError> {
    let x0 = initial_state(plan, sim)?;
    let post = final_params(&plan.params, &plan.events)?;
    let planar = sim.model.order() == ModelOrder::Second;
    let targets: Vec<Vector2<f64>> = if matches!(sim.model, Model::OffGrid) {
        vec![Vector2::zeros()]
    } else if post.ctrl.alpha == 0.0 {
        // No isolated equilibria to converge to.
        Vec::new()
    } else {
        equilibria(&post)?.points.iter().map(|e| e.v()).collect()
    };
    let v_m = voltage_bound(&post).ok().filter(|_| !matches!(sim.model, Model::OffGrid));
    let thresholds = Thresholds { v_m, ..Thresholds::default() };
    let mut config = sim.config;
    if !planar {
        config.escape_norm = v_m.map(|v| thresholds.diverge_factor * v);
    }
    let traj = integrate(sim.model, &plan.params, &x0, &plan.events, &config)?;
    let outcome = classify(&traj, &targets, &thresholds);
    let target = match &outcome {
        Outcome::Converged { eq_index, .. } => targets[*eq_index],
        _ => targets.first().copied().unwrap_or_else(Vector2::zeros),
    };
    let from = plan.events.first().map(|e| e.time).unwrap_or(0.0);
    let summary = SimulationSummary {
        model: sim.model,
        status: traj.status,
        samples: traj.len(),
        final_time: *traj.times.last().expect("initial sample"),
        final_state: traj.last_state().as_slice().to_vec(),
        max_voltage: traj.states.iter().map(|x| x.vhat().norm()).fold(0.0, f64::max),
        v_m,
        bound_violations: v_m.filter(|_| planar).map(|v| bound_violations_after_entry(&traj, v, 1e-6).len()),
        time_to_10_percent: (sim.model == Model::Reduced(ModelOrder::Full))
            .then(|| decay_times(&traj, target, from))
            .flatten(),
        outcome,
    };
    Ok((summary, traj))
}

/// Trajectory CSV: time, state components, then the derived signals.
pub fn trajectory_csv(traj: &Trajectory, stride: usize) -> String {
    let names = traj.model.order().component_names();
    let mut out = String::with_capacity(traj.len() / stride * (names.len() + 6) * 24);
    out.push('t');
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",p,q,v,omega,eps\n");
    for k in (0..traj.len()).step_by(stride) {
        let d = &traj.derived[k];
        let _ = write!(out, "{:.16e}", traj.times[k]);
        for x in traj.states[k].as_slice() {
            let _ = write!(out, ",{x:.16e}");
        }
        let _ = writeln!(out, ",{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", d.p, d.q, d.v, d.omega, d.eps);
    }
    out
}

fn portrait_csv(entries: &[PortraitEntry]) -> String {
    let mut out = String::from("entry,initial_d,initial_q,outcome,d,q\n");
    for (k, e) in entries.iter().enumerate() {
        for [d, q] in &e.path {
            let _ = writeln!(
                out,
                "{k},{:.16e},{:.16e},{},{d:.16e},{q:.16e}",
                e.initial[0],
                e.initial[1],
                e.outcome.label()
            );
        }
    }
    out
}

fn portrait_summary(entries: &[PortraitEntry], v_m: Option<f64>) -> PortraitSummary {
    let mut counts = BTreeMap::new();
    for e in entries {
        *counts.entry(e.outcome.label()).or_insert(0) += 1;
    }
    let rows = entries
        .iter()
        .map(|e| {
            let (period, mean_radius, final_error) = match &e.outcome {
                Outcome::LimitCycle { period, mean_radius, .. } => (Some(*period), Some(*mean_radius), None),
                Outcome::Converged { final_error, .. } => (None, None, Some(*final_error)),
                _ => (None, None, None),
            };
            PortraitRow {
                initial: e.initial,
                outcome: e.outcome.label(),
                period,
                mean_radius,
                final_error,
                max_norm: e.max_norm,
            }
        })
        .collect();
    PortraitSummary { counts, v_m, max_norm: entries.iter().map(|e| e.max_norm).fold(0.0, f64::max), entries: rows }
}

/// Run every analysis the plan requests. `seed` adds a randomized property suite.
pub fn execute(plan: &Plan, seed: Option<u64>) -> Result<Artifacts, RunError> {
    let report = certificate_report(plan, None)?;
    let mut failure = None;

    let (simulation, trajectory_csv) = match &plan.simulate {
        Some(sim) => {
            let (summary, traj) = simulate(plan, sim)?;
            if let Status::StepUnderflow { t } = traj.status {
                failure = Some(format!("integration step collapsed at t = {t} s; trajectory is partial"));
            }
            (Some(summary), Some(trajectory_csv(&traj, plan.csv_stride)))
        }
        None => (None, None),
    };

    let boundary = match &plan.boundary {
        Some((alphas, cfg)) => {
            let curve = boundary_sweep(&plan.params, alphas, cfg)?;
            let omega0 = plan.params.ctrl.omega0;
            let scale = |v: &[Option<f64>]| v.iter().map(|e| e.map(|x| x / omega0)).collect();
            Some(BoundarySummary {
                model_order: curve.model_order,
                alphas: curve.alphas.clone(),
                eta_analytic: scale(&curve.eta_analytic),
                eta_empirical: scale(&curve.eta_empirical),
            })
        }
        None => None,
    };

    let (portrait, portrait_csv) = match &plan.portrait {
        Some(pp) => {
            let p = final_params(&plan.params, &plan.events)?;
            let v_m = voltage_bound(&p).ok();
            let th = Thresholds { v_m, ..Thresholds::default() };
            let entries = phase_portrait(&p, &pp.grid, &pp.config, &th)?;
            (Some(portrait_summary(&entries, v_m)), Some(portrait_csv(&entries)))
        }
        None => (None, None),
    };

    let analysis = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        scenario: plan.name.clone(),
        simulation,
        boundary,
        portrait,
        property_suite: seed.map(|s| property_suite(s, plan.suite_draws)),
    };
    Ok(Artifacts { report, analysis, trajectory_csv, portrait_csv, failure })
}

/// Write `report.json`, `analysis.json` and any CSV files into `dir`.
pub fn write_artifacts(a: &Artifacts, dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    let json = |v: &dyn erased::Json| v.to_pretty();
    std::fs::write(dir.join("report.json"), json(&a.report))?;
    std::fs::write(dir.join("analysis.json"), json(&a.analysis))?;
    if let Some(csv) = &a.trajectory_csv {
        std::fs::write(dir.join("trajectory.csv"), csv)?;
    }
    if let Some(csv) = &a.portrait_csv {
        std::fs::write(dir.join("portrait.csv"), csv)?;
    }
    Ok(())
}

mod erased {
    pub trait Json {
        fn to_pretty(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_pretty(&self) -> String {
            let mut s = serde_json::to_string_pretty(self).expect("report types serialize");
            s.push('\n');
            s
        }
    }
}
