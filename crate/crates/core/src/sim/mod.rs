//! Deterministic integration of any model with grid events, plus the signals
//! derived from a trajectory.

mod integrator;
mod signals;

use serde::{Deserialize, Serialize};

use integrator::{rk4_step, Buf, Dopri, StepResult, System, MAX_DIM};
pub use signals::{
    deviation_norms, error_coordinates, lyapunov_trace, time_to_fraction, ErrorCoordinates, LyapunovTrace,
};

use crate::model::{eval, terminal_quantities, Model, StateVector, SystemParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Method {
    Rk4 { step: f64 },
    Dopri5 { rtol: f64, atol: f64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::Dopri5 { rtol: 1e-8, atol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
    /// Spacing of stored samples (s); decoupled from the step size.
    pub sample_interval: f64,
    /// Stop early once `‖v̂‖` exceeds this.
    pub escape_norm: Option<f64>,
}

impl IntegratorConfig {
    pub fn new(t_end: f64, sample_interval: f64) -> Self {
        Self { method: Method::default(), t_end, sample_interval, escape_norm: None }
    }

    pub fn rk4(step: f64, t_end: f64, sample_interval: f64) -> Self {
        Self { method: Method::Rk4 { step }, t_end, sample_interval, escape_norm: None }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be > 0");
        }
        if !(self.sample_interval > 0.0) {
            return bad("sample_interval must be > 0");
        }
        match self.method {
            Method::Rk4 { step } if !(step > 0.0) => bad("rk4 step must be > 0"),
            Method::Dopri5 { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => bad("tolerances must be > 0"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EventChange {
    GridVoltage { v_g: f64 },
    GridFrequency { omega_g: f64 },
    Setpoints { p_star: f64, q_star: f64, v_star: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub change: EventChange,
}

impl Event {
    pub fn grid_voltage(time: f64, v_g: f64) -> Self {
        Self { time, change: EventChange::GridVoltage { v_g } }
    }

    pub fn apply(&self, p: &SystemParams) -> Result<SystemParams> {
        match self.change {
            EventChange::GridVoltage { v_g } => p.with_grid_voltage(v_g),
            EventChange::GridFrequency { omega_g } => p.with_grid_frequency(omega_g),
            EventChange::Setpoints { p_star, q_star, v_star } => p.with_setpoints(p_star, q_star, v_star),
        }
    }
}

/// Parameters in force after every event has been applied.
pub fn final_params(p: &SystemParams, events: &[Event]) -> Result<SystemParams> {
    events.iter().try_fold(*p, |acc, e| e.apply(&acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Status {
    Completed,
    /// Adaptive step collapsed; trajectory is partial.
    StepUnderflow {
        t: f64,
    },
    /// `‖v̂‖` passed the escape norm; trajectory is partial.
    Escaped {
        t: f64,
    },
}

/// Per-sample derived signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    pub p: f64,
    pub q: f64,
    /// Terminal voltage amplitude.
    pub v: f64,
    /// Oscillator angular frequency (pu).
    pub omega: f64,
    /// Oscillator amplitude rate `d ln‖v̂‖/dt` (1/s).
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model: Model,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub derived: Vec<Derived>,
    pub events: Vec<Event>,
    /// Parameters of each segment; segment 0 precedes the first event.
    pub segment_params: Vec<SystemParams>,
    /// Segment index of each sample.
    pub segment: Vec<usize>,
    pub status: Status,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn params_at(&self, k: usize) -> &SystemParams {
        &self.segment_params[self.segment[k]]
    }

    pub fn last_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has the initial sample")
    }

    pub fn completed(&self) -> bool {
        matches!(self.status, Status::Completed)
    }
}

pub fn derived_signals(model: Model, p: &SystemParams, x: &[f64]) -> Derived {
    let (v, i) = terminal_quantities(model, p, x);
    let s = v * i.conj();
    let mut dx = [0.0; MAX_DIM];
    eval(model, p, x, &mut dx[..x.len()]);
    let vhat = num_complex::Complex64::new(x[0], x[1]);
    let rate = num_complex::Complex64::new(dx[0], dx[1]) / vhat;
    let frame = if matches!(model, Model::OffGrid) { 0.0 } else { p.grid.omega_g };
    Derived { p: s.re, q: s.im, v: v.norm(), omega: frame + rate.im / p.ctrl.omega0, eps: rate.re }
}

struct Recorder {
    traj: Trajectory,
}

impl Recorder {
    fn push(&mut self, t: f64, x: &Buf, n: usize) {
        let seg = self.traj.segment_params.len() - 1;
        let p = &self.traj.segment_params[seg];
        let state = StateVector::new(self.traj.model.order(), &x[..n]).expect("dimension fixed by model");
        self.traj.derived.push(derived_signals(self.traj.model, p, &x[..n]));
        self.traj.times.push(t);
        self.traj.states.push(state);
        self.traj.segment.push(seg);
    }
}

/// Integrate `model` from `x0` over `[0, t_end]`, applying `events` as
/// parameter steps. No step straddles an event. Samples at an event time
/// are recorded after the event is applied.
pub fn integrate(
    model: Model,
    params: &SystemParams,
    x0: &StateVector,
    events: &[Event],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    x0.expect_order(model.order())?;
    for (k, e) in events.iter().enumerate() {
        if !(0.0..=config.t_end).contains(&e.time) {
            return Err(Error::Config(format!("event {k} at t = {} lies outside [0, t_end]", e.time)));
        }
        if k > 0 && e.time <= events[k - 1].time {
            return Err(Error::Config("event times must be strictly increasing".into()));
        }
    }

    let n = model.dim();
    let dt = config.sample_interval;
    let n_samples = (config.t_end / dt + 1e-9).floor() as usize;
    let sample_time = |k: usize| if k > n_samples { config.t_end } else { k as f64 * dt };
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * dt;

    let mut rec = Recorder {
        traj: Trajectory {
            model,
            times: Vec::with_capacity(n_samples + 2),
            states: Vec::with_capacity(n_samples + 2),
            derived: Vec::with_capacity(n_samples + 2),
            events: Vec::new(),
            segment_params: vec![*params],
            segment: Vec::with_capacity(n_samples + 2),
            status: Status::Completed,
        },
    };

    let mut x: Buf = [0.0; MAX_DIM];
    x[..n].copy_from_slice(x0.as_slice());
    let mut t = 0.0;
    let mut next_event = 0;
    let mut next_sample = 0;
    let mut dopri = match config.method {
        Method::Dopri5 { rtol, atol } => Some(Dopri::new(rtol, atol, config.t_end)),
        Method::Rk4 { .. } => None,
    };

    let apply_event = |rec: &mut Recorder, e: &Event| -> Result<()> {
        let p = e.apply(rec.traj.segment_params.last().expect("nonempty"))?;
        rec.traj.segment_params.push(p);
        rec.traj.events.push(*e);
        Ok(())
    };

    loop {
        while next_event < events.len() && same(events[next_event].time, t) {
            apply_event(&mut rec, &events[next_event])?;
            next_event += 1;
            if let Some(d) = dopri.as_mut() {
                d.reset();
            }
        }
        if next_sample <= n_samples && same(sample_time(next_sample), t) {
            rec.push(t, &x, n);
            next_sample += 1;
        }
        if t >= config.t_end || same(t, config.t_end) {
            if !rec.traj.times.last().is_some_and(|tl| same(*tl, t)) {
                rec.push(t, &x, n);
            }
            break;
        }
        // Next stop: the earlier of the next sample, next event and t_end.
        let mut stop = config.t_end;
        if next_sample <= n_samples {
            stop = stop.min(sample_time(next_sample));
        }
        if next_event < events.len() {
            stop = stop.min(events[next_event].time);
        }

        let p = *rec.traj.segment_params.last().expect("nonempty");
        let sys = System { model, params: &p, n };
        match (config.method, dopri.as_mut()) {
            (Method::Rk4 { step }, _) => {
                let steps = ((stop - t) / step - 1e-9).ceil().max(1.0) as usize;
                let h = (stop - t) / steps as f64;
                for _ in 0..steps {
                    rk4_step(&sys, &mut x, h);
                }
            }
            (Method::Dopri5 { .. }, Some(d)) => {
                if d.h == 0.0 {
                    d.initial_step(&sys, &x);
                }
                while !same(t, stop) {
                    let remaining = stop - t;
                    let clipped = d.h >= remaining;
                    let h = if clipped { remaining } else { d.h };
                    if h < 1e-14 * t.abs().max(1.0) {
                        rec.push(t, &x, n);
                        rec.traj.status = Status::StepUnderflow { t };
                        return Ok(rec.traj);
                    }
                    if let StepResult::Accepted = d.try_step(&sys, &mut x, h, clipped) {
                        t = if clipped { stop } else { t + h };
                    }
                }
            }
            (Method::Dopri5 { .. }, None) => unreachable!("stepper constructed for adaptive method"),
        }
        t = stop;
        if !x[..n].iter().all(|v| v.is_finite()) {
            rec.traj.status = Status::StepUnderflow { t };
            return Ok(rec.traj);
        }
        if let Some(limit) = config.escape_norm {
            if x[0].hypot(x[1]) > limit {
                rec.push(t, &x, n);
                rec.traj.status = Status::Escaped { t };
                return Ok(rec.traj);
            }
        }
    }
    Ok(rec.traj)
}
