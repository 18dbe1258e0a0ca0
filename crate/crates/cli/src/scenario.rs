//! Declarative scenario files (TOML) and their resolution into core types.

use std::fmt;

use dvoc_core::analysis::{InitialGrid, SweepConfig, SweepMode};
use dvoc_core::cases::DIP_VOLTAGE;
use dvoc_core::sim::{Event, EventChange, IntegratorConfig, Method};
use dvoc_core::{Model, ModelOrder, ParamSpec, SystemParams};
use serde::{Deserialize, Serialize};

use crate::quantity::{Angle, Quantity, Unit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub grid: GridSection,
    pub controller: ControllerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portrait: Option<PortraitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub r: Quantity,
    /// Reactance at nominal frequency.
    pub x: Quantity,
    pub v: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub eta: Quantity,
    pub alpha: Quantity,
    pub phi: Angle,
    pub p_star: Quantity,
    pub q_star: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_star: Option<Quantity>,
}

/// Overrides of the standard LC filter and inner-loop gains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_f: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_f: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_f: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_f: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_pv: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_rv: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_pc: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_rc: Option<Quantity>,
}

/// One parameter step; exactly one change field must be set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_voltage: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_frequency: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setpoints: Option<SetpointChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetpointChange {
    pub p_star: Quantity,
    pub q_star: Quantity,
    pub v_star: Quantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Second,
    Fourth,
    Eighth,
    Full,
    OffGrid,
}

impl ModelName {
    pub fn model(self) -> Model {
        match self {
            ModelName::Second => Model::Reduced(ModelOrder::Second),
            ModelName::Fourth => Model::Reduced(ModelOrder::Fourth),
            ModelName::Eighth => Model::Reduced(ModelOrder::Eighth),
            ModelName::Full => Model::Reduced(ModelOrder::Full),
            ModelName::OffGrid => Model::OffGrid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Adaptive,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedStart {
    /// Equilibrium of the initial parameters (highest amplitude if several).
    Equilibrium,
    /// Oscillator voltage equal to the grid voltage.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(NamedStart),
    /// Oscillator voltage `[d, q]` in pu; fast states start on their steady-state maps.
    Point([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub model: ModelName,
    pub t_end: Quantity,
    pub sample: Quantity,
    pub initial: InitialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    /// Evaluate the full-order conditions at this ε.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Scan for the admissible ε-interval.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub epsilon_scan: bool,
    /// `c1` as a fraction of `α1` for the single-ε check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepModeName {
    Analytic,
    Empirical,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub alphas: Vec<f64>,
    pub mode: SweepModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dip_voltage: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_min: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_max: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_tol: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitSection {
    pub half_width: Quantity,
    pub points: usize,
    pub t_end: Quantity,
    pub sample: Quantity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Write every n-th sample to the trajectory CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_stride: Option<usize>,
    /// Draws for `--seed` property suites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite_draws: Option<usize>,
}

/// A scenario problem located by its field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

impl ScenarioError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ScenarioError {}

type Res<T> = Result<T, ScenarioError>;

impl Scenario {
    pub fn parse(text: &str) -> Res<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| ScenarioError::new("", e.message()))?;
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable in TOML")
    }
}

fn expect(q: Quantity, path: &str, allowed: &[Unit]) -> Res<f64> {
    if allowed.contains(&q.unit) {
        Ok(q.value)
    } else {
        let names: Vec<String> = allowed
            .iter()
            .map(|u| if *u == Unit::None { "no unit".into() } else { format!("`{}`", u.suffix()) })
            .collect();
        let found = if q.unit == Unit::None { "no unit".to_string() } else { format!("`{}`", q.unit.suffix()) };
        Err(ScenarioError::new(path, format!("expected {}, found {found}", names.join(" or "))))
    }
}

fn pu(q: Quantity, path: &str) -> Res<f64> {
    expect(q, path, &[Unit::Pu])
}

fn seconds(q: Quantity, path: &str) -> Res<f64> {
    expect(q, path, &[Unit::Seconds])
}

fn positive(v: f64, path: &str) -> Res<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ScenarioError::new(path, format!("must be > 0, got {v}")))
    }
}

/// Angular rate in rad/s.
fn rate(q: Quantity, path: &str, omega0: f64) -> Res<f64> {
    let v = expect(q, path, &[Unit::TimesOmega0, Unit::RadPerSecond])?;
    Ok(if q.unit == Unit::TimesOmega0 { v * omega0 } else { v })
}

fn gain(q: Quantity, path: &str) -> Res<f64> {
    expect(q, path, &[Unit::Pu, Unit::None])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimPlan {
    pub model: Model,
    pub config: IntegratorConfig,
    pub initial: InitialState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullOrderPlan {
    pub epsilon: Option<f64>,
    pub scan: bool,
    pub c1_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortraitPlan {
    pub grid: InitialGrid,
    pub config: IntegratorConfig,
}

/// A validated scenario in core types.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub name: String,
    pub params: SystemParams,
    pub events: Vec<Event>,
    pub simulate: Option<SimPlan>,
    pub full_order: Option<FullOrderPlan>,
    pub boundary: Option<(Vec<f64>, SweepConfig)>,
    pub portrait: Option<PortraitPlan>,
    pub csv_stride: usize,
    pub suite_draws: usize,
}

impl Scenario {
    pub fn resolve(&self) -> Res<Plan> {
        let mut spec = ParamSpec::standard();
        let omega0 = spec.omega0();

        let g = &self.grid;
        spec.r_g = pu(g.r, "grid.r")?;
        spec.l_g_pu = pu(g.x, "grid.x")?;
        spec.v_g = pu(g.v, "grid.v")?;
        if let Some(f) = g.frequency {
            spec.omega_g = pu(f, "grid.frequency")?;
        }

        let c = &self.controller;
        spec.eta = positive(rate(c.eta, "controller.eta", omega0)?, "controller.eta")?;
        spec.alpha = gain(c.alpha, "controller.alpha")?;
        spec.p_star = pu(c.p_star, "controller.p_star")?;
        spec.q_star = pu(c.q_star, "controller.q_star")?;
        if let Some(v) = c.v_star {
            spec.v_star = pu(v, "controller.v_star")?;
        }
        spec.phi = match c.phi {
            Angle::GridAngle => spec.grid_angle(),
            Angle::Fixed(q) => expect(q, "controller.phi", &[Unit::Rad])?,
        };

        if let Some(f) = &self.filter {
            let set = |field: &mut f64, q: Option<Quantity>, path: &str, is_gain: bool| -> Res<()> {
                if let Some(q) = q {
                    *field = if is_gain { gain(q, path)? } else { pu(q, path)? };
                }
                Ok(())
            };
            set(&mut spec.r_f, f.r_f, "filter.r_f", false)?;
            set(&mut spec.l_f_pu, f.l_f, "filter.l_f", false)?;
            set(&mut spec.g_f, f.g_f, "filter.g_f", false)?;
            set(&mut spec.c_f_pu, f.c_f, "filter.c_f", false)?;
            set(&mut spec.k_pv, f.k_pv, "filter.k_pv", true)?;
            set(&mut spec.k_rv, f.k_rv, "filter.k_rv", true)?;
            set(&mut spec.k_pc, f.k_pc, "filter.k_pc", true)?;
            set(&mut spec.k_rc, f.k_rc, "filter.k_rc", true)?;
        }

        let params = spec.build().map_err(|e| ScenarioError::new("", e.to_string()))?;

        let mut events = Vec::with_capacity(self.events.len());
        for (k, e) in self.events.iter().enumerate() {
            let path = |f: &str| format!("events[{k}].{f}");
            let time = seconds(e.time, &path("time"))?;
            let mut changes = Vec::new();
            if let Some(v) = e.grid_voltage {
                changes.push(EventChange::GridVoltage { v_g: pu(v, &path("grid_voltage"))? });
            }
            if let Some(w) = e.grid_frequency {
                changes.push(EventChange::GridFrequency { omega_g: pu(w, &path("grid_frequency"))? });
            }
            if let Some(s) = &e.setpoints {
                changes.push(EventChange::Setpoints {
                    p_star: pu(s.p_star, &path("setpoints.p_star"))?,
                    q_star: pu(s.q_star, &path("setpoints.q_star"))?,
                    v_star: pu(s.v_star, &path("setpoints.v_star"))?,
                });
            }
            let [change] = changes[..] else {
                return Err(ScenarioError::new(
                    format!("events[{k}]"),
                    "exactly one of grid_voltage, grid_frequency, setpoints is required",
                ));
            };
            if k > 0 && time <= events.last().map(|e: &Event| e.time).unwrap_or(f64::NEG_INFINITY) {
                return Err(ScenarioError::new(path("time"), "event times must be strictly increasing"));
            }
            events.push(Event { time, change });
        }
        let mut probe = params;
        for (k, e) in events.iter().enumerate() {
            probe = e.apply(&probe).map_err(|err| ScenarioError::new(format!("events[{k}]"), err.to_string()))?;
        }

        let simulate = self.simulate.as_ref().map(|s| resolve_simulation(s, &events, &params)).transpose()?;

        let full_order = self.certify.as_ref().and_then(|c| {
            (c.epsilon.is_some() || c.epsilon_scan).then_some(FullOrderPlan {
                epsilon: c.epsilon,
                scan: c.epsilon_scan,
                c1_fraction: c.c1_fraction.unwrap_or(dvoc_core::certify::C1_DEFAULT_FRACTION),
            })
        });
        if let Some(f) = &full_order {
            if let Some(e) = f.epsilon {
                if !(e > 3.0) {
                    return Err(ScenarioError::new("certify.epsilon", format!("must exceed 3, got {e}")));
                }
            }
            if !(f.c1_fraction > 0.0 && f.c1_fraction < 1.0) {
                return Err(ScenarioError::new("certify.c1_fraction", "must lie in (0, 1)"));
            }
        }

        let boundary = self.boundary.as_ref().map(|b| resolve_boundary(b, omega0)).transpose()?;

        let portrait = self
            .portrait
            .as_ref()
            .map(|p| -> Res<PortraitPlan> {
                let half = positive(pu(p.half_width, "portrait.half_width")?, "portrait.half_width")?;
                if p.points == 0 {
                    return Err(ScenarioError::new("portrait.points", "must be ≥ 1"));
                }
                let t_end = positive(seconds(p.t_end, "portrait.t_end")?, "portrait.t_end")?;
                let sample = positive(seconds(p.sample, "portrait.sample")?, "portrait.sample")?;
                Ok(PortraitPlan {
                    grid: InitialGrid::square(half, p.points),
                    config: IntegratorConfig::new(t_end, sample),
                })
            })
            .transpose()?;

        let out = self.output.unwrap_or_default();
        let csv_stride = out.csv_stride.unwrap_or(1);
        if csv_stride == 0 {
            return Err(ScenarioError::new("output.csv_stride", "must be ≥ 1"));
        }
        Ok(Plan {
            name: self.name.clone(),
            params,
            events,
            simulate,
            full_order,
            boundary,
            portrait,
            csv_stride,
            suite_draws: out.suite_draws.unwrap_or(1000),
        })
    }
}

fn resolve_simulation(s: &SimulateSection, events: &[Event], params: &SystemParams) -> Res<SimPlan> {
    let t_end = positive(seconds(s.t_end, "simulate.t_end")?, "simulate.t_end")?;
    let sample = positive(seconds(s.sample, "simulate.sample")?, "simulate.sample")?;
    let method = match s.method.unwrap_or(MethodName::Adaptive) {
        MethodName::Adaptive => {
            if s.step.is_some() {
                return Err(ScenarioError::new("simulate.step", "only valid with method = \"rk4\""));
            }
            let Method::Dopri5 { rtol, atol } = Method::default() else { unreachable!("adaptive default") };
            Method::Dopri5 { rtol: s.rtol.unwrap_or(rtol), atol: s.atol.unwrap_or(atol) }
        }
        MethodName::Rk4 => {
            let step = s.step.ok_or_else(|| ScenarioError::new("simulate.step", "required with method = \"rk4\""))?;
            Method::Rk4 { step: positive(seconds(step, "simulate.step")?, "simulate.step")? }
        }
    };
    if let Method::Dopri5 { rtol, atol } = method {
        positive(rtol, "simulate.rtol")?;
        positive(atol, "simulate.atol")?;
    }
    if let Some((k, e)) = events.iter().enumerate().find(|(_, e)| e.time > t_end) {
        return Err(ScenarioError::new(format!("events[{k}].time"), format!("{} s lies after simulate.t_end", e.time)));
    }
    if s.model == ModelName::OffGrid {
        if params.grid.v_g != 0.0 {
            return Err(ScenarioError::new("grid.v", "the off-grid model requires v = 0 pu"));
        }
        if matches!(s.initial, InitialState::Named(_)) {
            return Err(ScenarioError::new("simulate.initial", "the off-grid model needs an explicit [d, q] start"));
        }
    }
    Ok(SimPlan {
        model: s.model.model(),
        config: IntegratorConfig { method, t_end, sample_interval: sample, escape_norm: None },
        initial: s.initial,
    })
}

fn resolve_boundary(b: &BoundarySection, omega0: f64) -> Res<(Vec<f64>, SweepConfig)> {
    if b.alphas.is_empty() {
        return Err(ScenarioError::new("boundary.alphas", "must not be empty"));
    }
    if let Some(k) = b.alphas.iter().position(|a| !(*a > 0.0)) {
        return Err(ScenarioError::new(format!("boundary.alphas[{k}]"), "must be > 0"));
    }
    let mode = match b.mode {
        SweepModeName::Analytic => SweepMode::Analytic,
        SweepModeName::Empirical => SweepMode::Empirical,
        SweepModeName::Both => SweepMode::Both,
    };
    let mut cfg = SweepConfig::new(mode, omega0);
    if let Some(m) = b.model {
        let Model::Reduced(order) = m.model() else {
            return Err(ScenarioError::new("boundary.model", "the sweep needs a grid-connected model"));
        };
        cfg.model_order = order;
    }
    cfg.dip_voltage = b.dip_voltage.map(|v| pu(v, "boundary.dip_voltage")).transpose()?.unwrap_or(DIP_VOLTAGE);
    if let Some(h) = b.horizon {
        cfg.horizon = positive(seconds(h, "boundary.horizon")?, "boundary.horizon")?;
    }
    if let Some(q) = b.eta_min {
        cfg.eta_min = positive(rate(q, "boundary.eta_min", omega0)?, "boundary.eta_min")?;
    }
    if let Some(q) = b.eta_max {
        cfg.eta_max = rate(q, "boundary.eta_max", omega0)?;
    }
    if let Some(q) = b.eta_tol {
        cfg.eta_tol = positive(rate(q, "boundary.eta_tol", omega0)?, "boundary.eta_tol")?;
    }
    if !(cfg.eta_max > cfg.eta_min) {
        return Err(ScenarioError::new("boundary.eta_max", "must exceed eta_min"));
    }
    Ok((b.alphas.clone(), cfg))
}
