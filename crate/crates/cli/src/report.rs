//! Certificate report: every analytic condition evaluated on the parameters
//! in force after the last scenario event.

use dvoc_core::certify::{
    certify_second_order, check_full_order, check_voltage_following, epsilon_range, kappa, off_grid_classification,
    scr_theta, voltage_bound, Check, EpsilonRange, Kappa, OffGridOutcome,
};
use dvoc_core::equilibrium::{
    classical_droop_equilibria, equilibria, ClassicalPoint, CubicCoefficients, EquilibriumPoint, Uniqueness,
};
use dvoc_core::sim::final_params;
use dvoc_core::{ParamSpec, SystemParams};
use serde::Serialize;

use crate::scenario::Plan;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub satisfied: bool,
    pub margin: f64,
    /// The inequality being tested.
    pub equation: &'static str,
}

impl Condition {
    fn new(name: impl Into<String>, check: Check, equation: &'static str) -> Self {
        Self { name: name.into(), satisfied: check.satisfied, margin: check.margin, equation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSummary {
    pub cubic: CubicCoefficients,
    pub uniqueness: Uniqueness,
    pub points: Vec<EquilibriumPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullOrderSummary {
    pub epsilon: Option<f64>,
    pub c1_fraction: f64,
    pub m_positive_definite: Option<bool>,
    pub m_min_scaled_eigenvalue: Option<f64>,
    pub roa_radius: Option<f64>,
    pub epsilon_range: Option<EpsilonRange>,
    /// Attraction radius at the upper end of the ε-interval.
    pub roa_radius_at_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub schema_version: u32,
    pub scenario: String,
    pub parameters: ParamSpec,
    pub equilibria: Option<EquilibriumSummary>,
    pub classical_equilibria: Vec<ClassicalPoint>,
    pub kappa: Kappa,
    pub v_m: Option<f64>,
    pub scr_theta: f64,
    pub conditions: Vec<Condition>,
    pub off_grid: Option<OffGridOutcome>,
    pub full_order: Option<FullOrderSummary>,
    /// Conditions that could not be evaluated, with the reason.
    pub notes: Vec<String>,
}

const GLOBAL_NO_EQ: &str = "κ_r + α < 0";
const GLOBAL: &str = "κ_r + α < α v_s² / (2 v*²)";
const LOCAL: &str = "κ_r + α < α v_s² / v*²";
const HURWITZ: &str = "max Re λ(J) < 0";
const UNSTABLE_A: &str = "κ_r + α > 2 α v_s² / v*²";
const UNSTABLE_B: &str = "(κ_r + α − 2r)² + (ωΔ + κ_i)² < r², r = α v_s² / v*²";
const VOLTAGE_FOLLOWING: &str = "Re(e^{jφ} ς̄*) < Re(e^{jφ} y)";
const FULL_A: &str = "0 < c1 < α1";
const FULL_B: &str = "η < c1 / ((l_g / r_g) |y| (c1 + c_ε))";
const FULL_C: &str = "0 < (1 + k_rv/k_pv) / (k_rv/c_f − 1) < 4 c2 r_g / (η (c_ε² + 4))";
const FULL_D: &str = "0 < (1 + k_rc/k_pc) / (k_rc/l_f − 1) < 4 c3 / ((β34/β43)(β41² + β42² + 4 β43²) + c3 γ4)";
const COMPOSITE: &str = "M ≻ 0";

/// Evaluate every applicable condition. `epsilon` overrides the scenario's
/// full-order request.
pub fn certificate_report(plan: &Plan, epsilon: Option<f64>) -> Result<CertificateReport, dvoc_core::Error> {
    let p = final_params(&plan.params, &plan.events)?;
    let mut notes = Vec::new();
    let mut conditions = Vec::new();
    let off_grid = p.grid.v_g == 0.0;

    conditions.push(Condition::new("global_no_equilibrium", dvoc_core::certify::check_global_no_eq(&p), GLOBAL_NO_EQ));

    let equilibria_summary = if off_grid {
        notes.push("grid voltage is zero: equilibrium conditions replaced by the off-grid classification".into());
        None
    } else if p.ctrl.alpha == 0.0 {
        notes.push("amplitude droop is zero: equilibrium conditions replaced by the voltage-following test".into());
        None
    } else {
        let set = equilibria(&p)?;
        let cert = certify_second_order(&p, &set).ok();
        if let Some(cert) = &cert {
            for (k, pc) in cert.points.iter().enumerate() {
                if let Some(g) = pc.global_with_eq {
                    conditions.push(Condition::new(format!("global[{k}]"), g, GLOBAL));
                }
                conditions.push(Condition::new(format!("local[{k}]"), pc.local.sufficient, LOCAL));
                conditions.push(Condition::new(
                    format!("local_hurwitz[{k}]"),
                    Check { satisfied: pc.local.hurwitz, margin: -pc.local.spectral_abscissa },
                    HURWITZ,
                ));
                conditions.push(Condition::new(format!("unstable_a[{k}]"), pc.unstable.a, UNSTABLE_A));
                conditions.push(Condition::new(format!("unstable_b[{k}]"), pc.unstable.b, UNSTABLE_B));
            }
        }
        if set.unique != Uniqueness::Unique || set.points.len() != 1 {
            notes.push(format!(
                "{} equilibria ({:?}): global certificate not applicable",
                set.points.len(),
                set.unique
            ));
        }
        Some(EquilibriumSummary { cubic: set.coeffs, uniqueness: set.unique, points: set.points })
    };

    if p.ctrl.alpha == 0.0 {
        let vf = check_voltage_following(&p)?;
        conditions.push(Condition::new("voltage_following", vf.stable, VOLTAGE_FOLLOWING));
    }

    let full_order = match (plan.full_order, epsilon) {
        (None, None) => None,
        (plan_fo, eps) => {
            let scan = plan_fo.is_some_and(|f| f.scan);
            let c1_fraction = plan_fo.map(|f| f.c1_fraction).unwrap_or(dvoc_core::certify::C1_DEFAULT_FRACTION);
            let eps = eps.or(plan_fo.and_then(|f| f.epsilon));
            Some(full_order_summary(&p, eps, scan, c1_fraction, &mut conditions, &mut notes))
        }
    };

    Ok(CertificateReport {
        schema_version: SCHEMA_VERSION,
        scenario: plan.name.clone(),
        parameters: *p.spec(),
        equilibria: equilibria_summary,
        classical_equilibria: if off_grid { Vec::new() } else { classical_droop_equilibria(&p) },
        kappa: kappa(&p),
        v_m: voltage_bound(&p).ok(),
        scr_theta: scr_theta(p.grid.y, p.ctrl.phi),
        conditions,
        off_grid: if off_grid { Some(off_grid_classification(&p)?) } else { None },
        full_order,
        notes,
    })
}

fn full_order_summary(
    p: &SystemParams,
    epsilon: Option<f64>,
    scan: bool,
    c1_fraction: f64,
    conditions: &mut Vec<Condition>,
    notes: &mut Vec<String>,
) -> FullOrderSummary {
    let mut out = FullOrderSummary {
        epsilon,
        c1_fraction,
        m_positive_definite: None,
        m_min_scaled_eigenvalue: None,
        roa_radius: None,
        epsilon_range: None,
        roa_radius_at_upper: None,
    };
    if let Some(eps) = epsilon {
        match check_full_order(p, eps, c1_fraction) {
            Ok(cert) => {
                conditions.push(Condition::new("full_order_a", cert.cond_a, FULL_A));
                conditions.push(Condition::new("full_order_b", cert.cond_b, FULL_B));
                conditions.push(Condition::new("full_order_c", cert.cond_c, FULL_C));
                conditions.push(Condition::new("full_order_d", cert.cond_d, FULL_D));
                conditions.push(Condition::new(
                    "composite_matrix",
                    Check { satisfied: cert.m_positive_definite, margin: cert.m_min_scaled_eigenvalue },
                    COMPOSITE,
                ));
                out.m_positive_definite = Some(cert.m_positive_definite);
                out.m_min_scaled_eigenvalue = Some(cert.m_min_scaled_eigenvalue);
                out.roa_radius = Some(cert.roa_radius);
            }
            Err(e) => notes.push(format!("full-order conditions at epsilon = {eps}: {e}")),
        }
    }
    if scan {
        match epsilon_range(p) {
            Ok(range) => {
                out.epsilon_range = range;
                if let (Some(r), Ok(set)) = (range, equilibria(p)) {
                    out.roa_radius_at_upper = dvoc_core::certify::roa_radius(r.upper, set.points[0].v_s).ok();
                }
                if range.is_none() {
                    notes.push("no epsilon satisfies the first three full-order conditions".into());
                }
            }
            Err(e) => notes.push(format!("epsilon scan: {e}")),
        }
    }
    out
}
