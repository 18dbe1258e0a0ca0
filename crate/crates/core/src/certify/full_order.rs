//! Conditions for the full-order model obtained by nesting singular
//! perturbation arguments from the slowest (oscillator) to the fastest
//! (current loop) time scale.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use serde::Serialize;

use super::{kappa, Check};
use crate::equilibrium::{equilibria, EquilibriumPoint, Uniqueness};
use crate::model::SystemParams;
use crate::{Error, Result};

/// Default choice of `c1` as a fraction of its supremum `α1`.
pub const C1_DEFAULT_FRACTION: f64 = 0.5;
/// Fraction used when `c1` is treated as free in `(0, α1)`.
pub const C1_SUPREMUM_FRACTION: f64 = 1.0 - 1e-9;

/// Spectral norm of a real 2×2 matrix.
pub fn spectral_norm(a: &Matrix2<f64>) -> f64 {
    let g = a.transpose() * a;
    let half_tr = 0.5 * g.trace();
    let disc = (half_tr * half_tr - g.determinant()).max(0.0);
    (half_tr + disc.sqrt()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationCoefficients {
    pub epsilon: f64,
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub alpha_3: f64,
    pub alpha_4: f64,
    pub beta_12: f64,
    pub beta_23: f64,
    pub beta_34: f64,
    pub b_211: f64,
    pub b_221: f64,
    pub b_311: f64,
    pub b_321: f64,
    pub b_411: f64,
    pub b_421: f64,
    pub b_422: f64,
    pub b_432: f64,
    pub b_433: f64,
    pub b_443: f64,
    pub beta_21: f64,
    pub beta_31: f64,
    pub beta_32: f64,
    pub beta_41: f64,
    pub beta_42: f64,
    pub beta_43: f64,
    pub gamma_2: f64,
    pub gamma_3: f64,
    pub gamma_4: f64,
    pub mu: [f64; 4],
    pub c_eps: f64,
    pub c_v: f64,
    pub c_c: f64,
}

fn require_theorem_setting(p: &SystemParams) -> Result<()> {
    if p.ctrl.omega_delta.abs() > 1e-12 * p.ctrl.omega0 {
        return Err(Error::Precondition("full-order certificate requires omega_delta = 0".into()));
    }
    if p.grid.r_g <= 0.0 {
        return Err(Error::Precondition("full-order certificate requires r_g > 0".into()));
    }
    if p.grid.l_g <= 0.0 {
        return Err(Error::Precondition("full-order certificate requires l_g > 0".into()));
    }
    if p.filt.k_rv <= p.filt.c_f {
        return Err(Error::Precondition("full-order certificate requires k_rv > c_f".into()));
    }
    if p.filt.k_rc <= p.filt.l_f {
        return Err(Error::Precondition("full-order certificate requires k_rc > l_f".into()));
    }
    Ok(())
}

pub fn perturbation_coefficients(
    p: &SystemParams,
    epsilon: f64,
    eq: &EquilibriumPoint,
) -> Result<PerturbationCoefficients> {
    require_theorem_setting(p)?;
    if !(epsilon > 3.0) {
        return Err(Error::NoNeighborhood(epsilon));
    }
    let (c, g, f) = (&p.ctrl, &p.grid, &p.filt);
    let k = kappa(p);
    let ratio = eq.v_s * eq.v_s / (c.v_star * c.v_star);
    let y_norm = spectral_norm(&g.y_mat);
    let z_norm = spectral_norm(&g.z_mat);
    let shifted = c.s_phi_star - p.y_phi() + c.alpha * Matrix2::identity();
    let c_eps = spectral_norm(&shifted) + c.alpha * epsilon * ratio;
    let c_v = f.c_f / f.k_pv + f.c_f / f.k_rv;
    let c_c = f.l_f / f.k_pc + f.l_f / f.k_rc;
    let yf_shift = spectral_norm(&(f.y_f_mat - f.k_pv * Matrix2::identity()));
    let line_tc = g.l_g / g.r_g;

    let b_211 = c_eps * c.eta * line_tc * y_norm;
    let b_221 = c.eta * line_tc * y_norm;
    let b_311 = c_eps * c_v * c.eta;
    let b_321 = c_v * c.eta;
    let b_411 = c_eps * c_c * c.eta * f.k_pv;
    let b_421 = c_c * c.eta * f.k_pv;
    let b_422 = c_c * z_norm / g.l_g;
    let b_432 = c_c / g.l_g;
    let b_433 = c_c * (yf_shift * (f.k_pv + f.k_rv) / f.c_f + f.k_rv);
    let b_443 = c_c * yf_shift / f.c_f;

    let beta_12 = 1.0;
    let beta_23 = 1.0 / g.r_g;
    let beta_34 = 1.0 / f.k_pv + 1.0 / f.k_rv;
    let (beta_21, beta_31, beta_32) = (b_211, b_311, b_321);
    let (beta_41, beta_42, beta_43) = (b_411, b_421 + b_422, b_432 + b_433);
    let mu_2 = beta_12 / beta_21;
    let mu_3 = mu_2 * beta_23 / beta_32;
    let mu_4 = mu_3 * beta_34 / beta_43;

    Ok(PerturbationCoefficients {
        epsilon,
        alpha_1: -k.kappa_r - c.alpha + 0.5 * c.alpha * ratio,
        alpha_2: 1.0,
        alpha_3: 1.0 - f.c_f / f.k_rv,
        alpha_4: 1.0 - f.l_f / f.k_rc,
        beta_12,
        beta_23,
        beta_34,
        b_211,
        b_221,
        b_311,
        b_321,
        b_411,
        b_421,
        b_422,
        b_432,
        b_433,
        b_443,
        beta_21,
        beta_31,
        beta_32,
        beta_41,
        beta_42,
        beta_43,
        gamma_2: b_221,
        gamma_3: 0.0,
        gamma_4: b_443,
        mu: [1.0, mu_2, mu_3, mu_4],
        c_eps,
        c_v,
        c_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositeMatrix {
    #[serde(serialize_with = "serialize_matrix4")]
    pub m: Matrix4<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub d2: f64,
    pub d3: f64,
}

fn serialize_matrix4<S: serde::Serializer>(m: &Matrix4<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<[f64; 4]> = (0..4).map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)], m[(i, 3)]]).collect();
    serde::Serialize::serialize(&rows, s)
}

impl CompositeMatrix {
    /// Smallest eigenvalue of `D^{-1/2} M D^{-1/2}` with `D = diag(M)`; the
    /// entries of `M` span many decades, so definiteness is judged after scaling.
    pub fn min_scaled_eigenvalue(&self) -> f64 {
        let d = self.m.diagonal();
        if d.iter().any(|x| !(*x > 0.0)) {
            return d.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
        }
        let s = d.map(|x| 1.0 / x.sqrt());
        let scaled = Matrix4::from_fn(|i, j| self.m[(i, j)] * s[i] * s[j]);
        SymmetricEigen::new(scaled).eigenvalues.min()
    }

    pub fn positive_definite(&self) -> bool {
        self.min_scaled_eigenvalue() >= 1e-12
    }
}

/// Row `i` (0-based) of the lower off-diagonal weights: halves on the
/// non-adjacent entries, the adjacent entry unweighted.
fn coupling_row(k: &PerturbationCoefficients, i: usize) -> Vec<f64> {
    match i {
        1 => vec![k.beta_21],
        2 => vec![0.5 * k.beta_31, k.beta_32],
        3 => vec![0.5 * k.beta_41, 0.5 * k.beta_42, k.beta_43],
        _ => vec![],
    }
}

/// Next margin from the previous one: the smaller eigenvalue of
/// `[[k c_prev, |β|], [|β|, α − γ]]`, returned with its discriminant.
fn next_margin(diag: f64, k: f64, c_prev: f64, beta_sq: f64) -> (f64, f64) {
    let s = diag + k * c_prev;
    let d = s * s + 4.0 * (beta_sq - diag * k * c_prev);
    if d < 0.0 {
        return (f64::NAN, d);
    }
    (0.5 * (s - d.sqrt()), d)
}

pub fn composite_matrix(k: &PerturbationCoefficients, c1: f64) -> CompositeMatrix {
    let alphas = [k.alpha_1, k.alpha_2, k.alpha_3, k.alpha_4];
    let gammas = [0.0, k.gamma_2, k.gamma_3, k.gamma_4];
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        m[(i, i)] = k.mu[i] * (alphas[i] - gammas[i]);
        for (j, b) in coupling_row(k, i).into_iter().enumerate() {
            m[(i, j)] = -k.mu[i] * b;
            m[(j, i)] = -k.mu[i] * b;
        }
    }
    let sq = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>();
    let (c2, d2) = next_margin(k.alpha_2 - k.gamma_2, k.beta_21 / k.beta_12, c1, sq(coupling_row(k, 1)));
    let (c3, d3) = next_margin(k.alpha_3 - k.gamma_3, k.beta_32 / k.beta_23, c2, sq(coupling_row(k, 2)));
    CompositeMatrix { m, c1, c2, c3, d2, d3 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullOrderCertificate {
    pub coeffs: PerturbationCoefficients,
    pub composite: CompositeMatrix,
    pub m_positive_definite: bool,
    pub m_min_scaled_eigenvalue: f64,
    pub cond_a: Check,
    pub cond_b: Check,
    pub cond_c: Check,
    pub cond_d: Check,
    pub roa_radius: f64,
}

impl FullOrderCertificate {
    pub fn first_three(&self) -> bool {
        self.cond_a.satisfied && self.cond_b.satisfied && self.cond_c.satisfied
    }

    pub fn all(&self) -> bool {
        self.first_three() && self.cond_d.satisfied
    }
}

/// `0 < lhs < rhs` with margin `rhs − lhs`.
fn bounded(lhs: f64, rhs: f64) -> Check {
    let margin = rhs - lhs;
    Check { satisfied: lhs > 0.0 && margin > 0.0, margin }
}

fn evaluate(p: &SystemParams, eq: &EquilibriumPoint, epsilon: f64, c1_fraction: f64) -> Result<FullOrderCertificate> {
    let k = perturbation_coefficients(p, epsilon, eq)?;
    let c1 = c1_fraction * k.alpha_1;
    let comp = composite_matrix(&k, c1);
    let (c, g, f) = (&p.ctrl, &p.grid, &p.filt);
    let y_norm = g.y.norm();

    let cond_a = Check { satisfied: c1 > 0.0 && k.alpha_1 - c1 > 0.0, margin: k.alpha_1 - c1 };
    let cond_b = {
        let bound = c1 / ((g.l_g / g.r_g) * y_norm * (c1 + k.c_eps));
        Check { satisfied: c1 > 0.0 && c.eta < bound, margin: bound - c.eta }
    };
    let cond_c = {
        let lhs = (1.0 + f.k_rv / f.k_pv) / (f.k_rv / f.c_f - 1.0);
        let rhs = 4.0 * comp.c2 / ((1.0 / g.r_g) * c.eta * (k.c_eps * k.c_eps + 4.0));
        bounded(lhs, rhs)
    };
    let cond_d = {
        let lhs = (1.0 + f.k_rc / f.k_pc) / (f.k_rc / f.l_f - 1.0);
        let (b41, b42, b43) = (k.beta_41 / k.c_c, k.beta_42 / k.c_c, k.beta_43 / k.c_c);
        let g4 = k.gamma_4 / k.c_c;
        let rhs = 4.0 * comp.c3 / ((k.beta_34 / b43) * (b41 * b41 + b42 * b42 + 4.0 * b43 * b43) + comp.c3 * g4);
        bounded(lhs, rhs)
    };
    Ok(FullOrderCertificate {
        coeffs: k,
        m_positive_definite: comp.positive_definite(),
        m_min_scaled_eigenvalue: comp.min_scaled_eigenvalue(),
        composite: comp,
        cond_a,
        cond_b,
        cond_c,
        cond_d,
        roa_radius: roa_radius(epsilon, eq.v_s)?,
    })
}

fn unique_equilibrium(p: &SystemParams) -> Result<EquilibriumPoint> {
    let set = equilibria(p)?;
    if set.unique != Uniqueness::Unique || set.points.len() != 1 {
        return Err(Error::TheoremInapplicable("full-order certificate requires a unique equilibrium"));
    }
    Ok(set.points[0])
}

/// Evaluate all four full-order conditions with `c1 = c1_fraction · α1`.
pub fn check_full_order(p: &SystemParams, epsilon: f64, c1_fraction: f64) -> Result<FullOrderCertificate> {
    require_theorem_setting(p)?;
    if !(c1_fraction > 0.0 && c1_fraction < 1.0) {
        return Err(Error::InvalidParameter { field: "c1", reason: "fraction of alpha_1 must lie in (0, 1)".into() });
    }
    let eq = unique_equilibrium(p)?;
    evaluate(p, &eq, epsilon, c1_fraction)
}

/// Radius of the ball around the equilibrium on which the cubic nonlinearity
/// is bounded by `ε`: the positive root `r` of `((1 + s)³ − 1)/s = ε`, `s = r/‖v_s‖`.
pub fn roa_radius(epsilon: f64, v_s_norm: f64) -> Result<f64> {
    if !(epsilon > 3.0) {
        return Err(Error::NoNeighborhood(epsilon));
    }
    if !(v_s_norm > 0.0) {
        return Err(Error::InvalidParameter { field: "v_s_norm", reason: "must be > 0".into() });
    }
    let growth = |s: f64| if s < 1e-4 { s * s + 3.0 * s + 3.0 } else { ((1.0 + s).powi(3) - 1.0) / s };
    let mut hi = 1.0;
    while growth(hi) < epsilon {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if growth(mid) < epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) * v_s_norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonRange {
    /// Lower end; equal to 3 (exclusive) when the conditions hold arbitrarily close to 3.
    pub lower: f64,
    pub upper: f64,
    /// The scan hit its ceiling while still satisfied.
    pub capped: bool,
    pub c1_fraction: f64,
}

/// Ceiling of the ε scan.
pub const EPSILON_SCAN_MAX: f64 = 1e4;

/// Largest ε-interval on which the first three full-order conditions hold.
///
/// `c1` only needs to exist in `(0, α1)`, and conditions (b) and (c) are
/// monotone increasing in `c1`, so the scan evaluates at its supremum.
pub fn epsilon_range(p: &SystemParams) -> Result<Option<EpsilonRange>> {
    require_theorem_setting(p)?;
    let eq = unique_equilibrium(p)?;
    let frac = C1_SUPREMUM_FRACTION;
    let holds = |e: f64| evaluate(p, &eq, e, frac).map(|c| c.first_three()).unwrap_or(false);

    // Geometric grid in ε − 3.
    const SAMPLES: usize = 600;
    let (lo_off, hi_off) = (1e-9_f64, EPSILON_SCAN_MAX - 3.0);
    let grid: Vec<f64> =
        (0..SAMPLES).map(|k| 3.0 + lo_off * (hi_off / lo_off).powf(k as f64 / (SAMPLES - 1) as f64)).collect();
    let flags: Vec<bool> = grid.iter().map(|e| holds(*e)).collect();

    let mut best: Option<(usize, usize)> = None;
    let mut k = 0;
    while k < SAMPLES {
        if flags[k] {
            let start = k;
            while k + 1 < SAMPLES && flags[k + 1] {
                k += 1;
            }
            let longer = best.is_none_or(|(s, e)| grid[k] - grid[start] > grid[e] - grid[s]);
            if longer {
                best = Some((start, k));
            }
        }
        k += 1;
    }
    let Some((s, e)) = best else { return Ok(None) };

    let refine = |mut inside: f64, mut outside: f64| {
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if holds(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let lower = if s == 0 { 3.0 } else { refine(grid[s], grid[s - 1]) };
    let capped = e == SAMPLES - 1;
    let upper = if capped { grid[e] } else { refine(grid[e], grid[e + 1]) };
    Ok(Some(EpsilonRange { lower, upper, capped, c1_fraction: frac }))
}
