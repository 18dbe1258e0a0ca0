//! Randomized checks of the structural invariants over a broad parameter domain.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certify::{
    check_global, check_global_no_eq, check_local, check_unstable, check_voltage_following, jacobian,
    spectral_abscissa, Verdict,
};
use crate::equilibrium::{equilibria, Uniqueness};
use crate::model::{ParamSpec, SystemParams};

/// Residual bound every reported equilibrium must meet.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Draw from the sampling domain: η ∈ [0.01, 0.1]·ω0, α ∈ (0, 5],
/// |z| ∈ [0.05, 1.5], ∠z ∈ [0, π/2], φ ∈ [0, π/2], p*, q* ∈ [−1, 1],
/// v_g ∈ [0.05, 1.2], nominal grid frequency.
pub fn sample_spec<R: Rng + ?Sized>(rng: &mut R) -> ParamSpec {
    let base = ParamSpec::standard();
    let omega0 = base.omega0();
    let z_abs = rng.random_range(0.05..=1.5);
    let z_angle = rng.random_range(0.0..=FRAC_PI_2);
    ParamSpec {
        r_g: z_abs * z_angle.cos(),
        l_g_pu: z_abs * z_angle.sin(),
        v_g: rng.random_range(0.05..=1.2),
        eta: rng.random_range(0.01..=0.1) * omega0,
        alpha: 5.0 * (1.0 - rng.random::<f64>()),
        phi: rng.random_range(0.0..=FRAC_PI_2),
        p_star: rng.random_range(-1.0..=1.0),
        q_star: rng.random_range(-1.0..=1.0),
        ..base
    }
}

/// Violation counts; every field except `draws` and `max_residual` should be zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub draws: usize,
    pub max_residual: f64,
    pub build_failures: usize,
    /// No equilibrium found.
    pub empty_sets: usize,
    pub residual_violations: usize,
    /// More than three points, or more than one with a negative discriminant.
    pub root_count_violations: usize,
    /// Positive quadratic coefficient without a negative discriminant.
    pub coefficient_uniqueness_violations: usize,
    /// Equilibrium-free global condition without a unique equilibrium.
    pub no_eq_uniqueness_violations: usize,
    /// Equilibrium-free global condition without the equilibrium-based one.
    pub no_eq_implies_global_violations: usize,
    /// Equilibrium-based global condition without the local one.
    pub global_implies_local_violations: usize,
    /// Local sufficient condition without a Hurwitz Jacobian.
    pub local_implies_hurwitz_violations: usize,
    /// Instability condition without an eigenvalue in the right half plane.
    pub unstable_eigen_violations: usize,
    /// Stability and instability conditions holding together.
    pub disjointness_violations: usize,
    /// Voltage-following condition disagreeing with the Hurwitz test (α = 0 copy).
    pub voltage_following_mismatches: usize,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.build_failures
            + self.empty_sets
            + self.residual_violations
            + self.root_count_violations
            + self.coefficient_uniqueness_violations
            + self.no_eq_uniqueness_violations
            + self.no_eq_implies_global_violations
            + self.global_implies_local_violations
            + self.local_implies_hurwitz_violations
            + self.unstable_eigen_violations
            + self.disjointness_violations
            + self.voltage_following_mismatches
    }
}

fn check_one(p: &SystemParams, r: &mut SuiteReport) {
    let set = match equilibria(p) {
        Ok(s) => s,
        Err(_) => {
            r.empty_sets += 1;
            return;
        }
    };
    if set.points.is_empty() {
        r.empty_sets += 1;
    }
    for pt in &set.points {
        r.max_residual = r.max_residual.max(pt.residual);
        if !(pt.residual <= RESIDUAL_TOL) {
            r.residual_violations += 1;
        }
    }
    if set.points.len() > 3 || (set.unique == Uniqueness::Unique && set.points.len() != 1) {
        r.root_count_violations += 1;
    }
    if set.coeffs.b > 0.0 && set.unique == Uniqueness::Multiple {
        r.coefficient_uniqueness_violations += 1;
    }

    let unique = set.unique == Uniqueness::Unique && set.points.len() == 1;
    let no_eq = check_global_no_eq(p);
    if no_eq.satisfied && !unique {
        r.no_eq_uniqueness_violations += 1;
    }
    let global = if unique { check_global(p, &set).ok() } else { None };
    if no_eq.satisfied && !global.is_some_and(|g| g.satisfied) {
        r.no_eq_implies_global_violations += 1;
    }
    for pt in &set.points {
        let local = check_local(p, pt);
        if global.is_some_and(|g| g.satisfied) && !local.sufficient.satisfied {
            r.global_implies_local_violations += 1;
        }
        if local.sufficient.satisfied && !local.hurwitz {
            r.local_implies_hurwitz_violations += 1;
        }
        let unstable = check_unstable(p, pt);
        if unstable.verdict() == Verdict::Satisfied && !(spectral_abscissa(&jacobian(p, pt)) > 0.0) {
            r.unstable_eigen_violations += 1;
        }
        if global.is_some_and(|g| g.satisfied) && unstable.any() {
            r.disjointness_violations += 1;
        }
    }

    if let Ok(vf) = p.modified(|s| s.alpha = 0.0).and_then(|q| check_voltage_following(&q)) {
        // Exact ties are measure-zero; skip near-marginal draws.
        if vf.stable.margin.abs() > 1e-9 && vf.stable.satisfied != vf.hurwitz {
            r.voltage_following_mismatches += 1;
        }
    }
}

/// Run every invariant on `draws` parameter sets drawn from `seed`.
pub fn property_suite(seed: u64, draws: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport { seed, draws, ..SuiteReport::default() };
    for _ in 0..draws {
        match sample_spec(&mut rng).build() {
            Ok(p) => check_one(&p, &mut report),
            Err(_) => report.build_failures += 1,
        }
    }
    report
}
