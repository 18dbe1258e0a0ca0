use nalgebra::Vector2;
use serde::Serialize;

use super::Trajectory;
use crate::model::{inductor_current_ref, line_current_map, ModelOrder};
use crate::{Error, Result};

/// Norms of the fast-state errors relative to their steady-state maps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorCoordinates {
    /// `‖i − Y(v̂ − v_g)‖`
    pub y2: Vec<f64>,
    /// `‖[v − v̂, ζ_v]‖`
    pub y3: Vec<f64>,
    /// `‖[i_f − i_f*, ζ_c]‖`
    pub y4: Vec<f64>,
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(0.0, f64::max);
    if m > 0.0 {
        v.iter().map(|x| x / m).collect()
    } else {
        vec![0.0; v.len()]
    }
}

impl ErrorCoordinates {
    pub fn normalized(&self) -> [Vec<f64>; 3] {
        [normalized(&self.y2), normalized(&self.y3), normalized(&self.y4)]
    }
}

pub fn error_coordinates(traj: &Trajectory) -> Result<ErrorCoordinates> {
    if traj.model.order() != ModelOrder::Full {
        return Err(Error::OrderMismatch { expected: 12, found: traj.model.dim() });
    }
    let n = traj.len();
    let mut out = ErrorCoordinates { y2: Vec::with_capacity(n), y3: Vec::with_capacity(n), y4: Vec::with_capacity(n) };
    for (k, x) in traj.states.iter().enumerate() {
        let p = traj.params_at(k);
        let (vhat, i, v, zv, i_f, zc) = (x.pair(0), x.pair(1), x.pair(2), x.pair(3), x.pair(4), x.pair(5));
        out.y2.push((i - line_current_map(p, vhat)).norm());
        out.y3.push(((v - vhat).norm_squared() + zv.norm_squared()).sqrt());
        let i_ref = inductor_current_ref(p, vhat, i, v, zv);
        out.y4.push(((i_f - i_ref).norm_squared() + zc.norm_squared()).sqrt());
    }
    Ok(out)
}

/// `‖v̂ − target‖` per sample.
pub fn deviation_norms(traj: &Trajectory, target: Vector2<f64>) -> Vec<f64> {
    traj.states.iter().map(|x| (x.vhat() - target).norm()).collect()
}

/// Last time at or after `t_from` when `values`, normalized by their maximum
/// over that window, is still at least `fraction`.
pub fn time_to_fraction(times: &[f64], values: &[f64], t_from: f64, fraction: f64) -> Option<f64> {
    let start = times.iter().position(|t| *t >= t_from)?;
    let max = values[start..].iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return None;
    }
    (start..times.len()).rev().find(|&k| values[k] / max >= fraction).map(|k| times[k] - t_from)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovTrace {
    /// `V = ‖v − v_s‖² / (2η)` per sample.
    pub values: Vec<f64>,
    /// Samples where `V` grew by more than `1e-9 · max V`.
    pub increases: Vec<usize>,
}

impl LyapunovTrace {
    pub fn monotone(&self) -> bool {
        self.increases.is_empty()
    }
}

pub fn lyapunov_trace(traj: &Trajectory, v_s: Vector2<f64>) -> Result<LyapunovTrace> {
    if traj.model.order() != ModelOrder::Second {
        return Err(Error::OrderMismatch { expected: 2, found: traj.model.dim() });
    }
    let values: Vec<f64> = traj
        .states
        .iter()
        .enumerate()
        .map(|(k, x)| (x.vhat() - v_s).norm_squared() / (2.0 * traj.params_at(k).ctrl.eta))
        .collect();
    let tol = 1e-9 * values.iter().cloned().fold(0.0, f64::max);
    let increases = (1..values.len()).filter(|&k| values[k] - values[k - 1] > tol).collect();
    Ok(LyapunovTrace { values, increases })
}
