use nalgebra::Vector2;
use rayon::prelude::*;
use serde::Serialize;

use super::{classify, Outcome, Thresholds};
use crate::equilibrium::equilibria;
use crate::model::{Model, ModelOrder, StateVector, SystemParams};
use crate::sim::{integrate, IntegratorConfig};
use crate::Result;

/// Rectangular grid of initial oscillator voltages, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialGrid {
    pub d_range: (f64, f64),
    pub q_range: (f64, f64),
    pub n_d: usize,
    pub n_q: usize,
}

impl InitialGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self { d_range: (-half_width, half_width), q_range: (-half_width, half_width), n_d: n, n_q: n }
    }

    pub fn points(&self) -> Vec<Vector2<f64>> {
        let axis = |(lo, hi): (f64, f64), n: usize, k: usize| {
            if n <= 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        };
        (0..self.n_q)
            .flat_map(|j| (0..self.n_d).map(move |i| (i, j)))
            .map(|(i, j)| Vector2::new(axis(self.d_range, self.n_d, i), axis(self.q_range, self.n_q, j)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitEntry {
    pub initial: [f64; 2],
    pub outcome: Outcome,
    /// Largest `‖v̂‖` over all samples, before decimation.
    pub max_norm: f64,
    pub path: Vec<[f64; 2]>,
}

/// Starts closer than this to an equilibrium are dropped.
const EQUILIBRIUM_EXCLUSION: f64 = 1e-6;
const PATH_POINTS: usize = 200;

/// Classify second-order trajectories started from every grid point.
pub fn phase_portrait(
    params: &SystemParams,
    grid: &InitialGrid,
    config: &IntegratorConfig,
    thresholds: &Thresholds,
) -> Result<Vec<PortraitEntry>> {
    let targets: Vec<Vector2<f64>> = equilibria(params)?.points.iter().map(|e| e.v()).collect();
    let starts: Vec<Vector2<f64>> =
        grid.points().into_iter().filter(|s| targets.iter().all(|e| (s - e).norm() > EQUILIBRIUM_EXCLUSION)).collect();
    starts
        .par_iter()
        .map(|s| {
            let x0 = StateVector::new(ModelOrder::Second, &[s.x, s.y])?;
            let traj = integrate(Model::Reduced(ModelOrder::Second), params, &x0, &[], config)?;
            let outcome = classify(&traj, &targets, thresholds);
            let stride = traj.len().div_ceil(PATH_POINTS).max(1);
            let path = traj.states.iter().step_by(stride).map(|x| [x.as_slice()[0], x.as_slice()[1]]).collect();
            let max_norm = traj.states.iter().map(|x| x.vhat().norm()).fold(0.0, f64::max);
            Ok(PortraitEntry { initial: [s.x, s.y], outcome, max_norm, path })
        })
        .collect()
}
