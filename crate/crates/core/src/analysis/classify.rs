use nalgebra::Vector2;
use serde::Serialize;

use crate::model::ModelOrder;
use crate::sim::{Status, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Leading fraction of the horizon ignored as transient.
    pub settle_fraction: f64,
    /// Trailing fraction of the horizon tested for convergence.
    pub terminal_fraction: f64,
    pub converge_tol: f64,
    /// Trailing fraction of the horizon used to place the Poincaré section.
    pub cycle_window_fraction: f64,
    pub return_spread: f64,
    /// Relative spread of successive return times.
    pub period_spread: f64,
    /// Cycles smaller than this are treated as decaying oscillations.
    pub min_cycle_radius: f64,
    pub diverge_factor: f64,
    /// Voltage bound used by the divergence test (ignored for second order).
    pub v_m: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            settle_fraction: 0.4,
            terminal_fraction: 0.1,
            converge_tol: 1e-4,
            cycle_window_fraction: 0.5,
            return_spread: 1e-3,
            period_spread: 0.01,
            min_cycle_radius: 1e-3,
            diverge_factor: 10.0,
            v_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Outcome {
    Converged {
        eq_index: usize,
        final_error: f64,
    },
    LimitCycle {
        period: f64,
        mean_radius: f64,
        centroid: [f64; 2],
        /// Samples of the last complete revolution.
        orbit: Vec<[f64; 2]>,
    },
    Diverged {
        t: f64,
    },
    Undecided {
        horizon: f64,
    },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Converged { .. } => "converged",
            Outcome::LimitCycle { .. } => "limit_cycle",
            Outcome::Diverged { .. } => "diverged",
            Outcome::Undecided { .. } => "undecided",
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Outcome::Converged { .. })
    }

    pub fn is_limit_cycle(&self) -> bool {
        matches!(self, Outcome::LimitCycle { .. })
    }
}

fn window_start(times: &[f64], fraction: f64) -> usize {
    let t_end = *times.last().expect("nonempty");
    let t0 = t_end * (1.0 - fraction);
    times.iter().position(|t| *t >= t0).unwrap_or(times.len() - 1)
}

/// Classify the oscillator voltage `v̂` of a trajectory.
pub fn classify(traj: &Trajectory, equilibria: &[Vector2<f64>], th: &Thresholds) -> Outcome {
    let horizon = *traj.times.last().expect("nonempty");
    let planar = traj.model.order() == ModelOrder::Second;
    if !planar {
        if let Status::Escaped { t } | Status::StepUnderflow { t } = traj.status {
            return Outcome::Diverged { t };
        }
    }
    if !traj.completed() {
        return Outcome::Undecided { horizon };
    }
    let v: Vec<Vector2<f64>> = traj.states.iter().map(|s| s.vhat()).collect();

    let start = window_start(&traj.times, th.terminal_fraction);
    let best = equilibria
        .iter()
        .enumerate()
        .map(|(j, eq)| (j, v[start..].iter().map(|x| (x - eq).norm()).fold(0.0, f64::max)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((eq_index, dist)) = best {
        if dist < th.converge_tol {
            return Outcome::Converged { eq_index, final_error: (v[v.len() - 1] - equilibria[eq_index]).norm() };
        }
    }

    let settle = window_start(&traj.times, 1.0 - th.settle_fraction);
    let cyc = window_start(&traj.times, th.cycle_window_fraction).max(settle);
    if let Some(cycle) = detect_cycle(&traj.times[cyc..], &v[cyc..], th) {
        return cycle;
    }

    if !planar {
        if let Some(v_m) = th.v_m {
            let limit = th.diverge_factor * v_m;
            if let Some(k) = v.iter().position(|x| x.norm() > limit) {
                return Outcome::Diverged { t: traj.times[k] };
            }
        }
    }
    Outcome::Undecided { horizon }
}

/// Returns through the ray from the window centroid along +d.
fn detect_cycle(times: &[f64], v: &[Vector2<f64>], th: &Thresholds) -> Option<Outcome> {
    if v.len() < 8 {
        return None;
    }
    let c = v.iter().sum::<Vector2<f64>>() / v.len() as f64;
    let mut direction: Option<bool> = None;
    let mut hits: Vec<(f64, f64, usize)> = Vec::new();
    for k in 1..v.len() {
        let (a, b) = (v[k - 1].y - c.y, v[k].y - c.y);
        let upward = a < 0.0 && b >= 0.0;
        let downward = a > 0.0 && b <= 0.0;
        if !(upward || downward) {
            continue;
        }
        let s = a / (a - b);
        let d = v[k - 1].x + s * (v[k].x - v[k - 1].x);
        if d <= c.x {
            continue;
        }
        let dir = *direction.get_or_insert(upward);
        if dir != upward {
            continue;
        }
        hits.push((times[k - 1] + s * (times[k] - times[k - 1]), d, k));
    }
    if hits.len() < 3 {
        return None;
    }
    let (dmin, dmax) = hits.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h.1), hi.max(h.1)));
    let periods: Vec<f64> = hits.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let mean_period = periods.iter().sum::<f64>() / periods.len() as f64;
    let (pmin, pmax) = periods.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(*p), hi.max(*p)));
    if dmax - dmin >= th.return_spread || (pmax - pmin) / mean_period >= th.period_spread {
        return None;
    }

    // Whole revolutions only, so the centroid and radius are unbiased.
    let (first, last) = (hits[0].2, hits[hits.len() - 1].2);
    let span = &v[first..last];
    let centroid = span.iter().sum::<Vector2<f64>>() / span.len() as f64;
    let mean_radius = span.iter().map(|x| (x - centroid).norm()).sum::<f64>() / span.len() as f64;
    if mean_radius < th.min_cycle_radius {
        return None;
    }
    let orbit_start = hits[hits.len() - 2].2;
    Some(Outcome::LimitCycle {
        period: mean_period,
        mean_radius,
        centroid: [centroid.x, centroid.y],
        orbit: v[orbit_start..last].iter().map(|x| [x.x, x.y]).collect(),
    })
}

/// Indices of samples above `v_m + slack` occurring after the first sample
/// inside the bound.
pub fn bound_violations_after_entry(traj: &Trajectory, v_m: f64, slack: f64) -> Vec<usize> {
    let Some(entry) = traj.states.iter().position(|s| s.vhat().norm() <= v_m) else { return Vec::new() };
    (entry..traj.len()).filter(|&k| traj.states[k].vhat().norm() > v_m + slack).collect()
}
