//! Parameter sets of the reference case studies.
//!
//! All share the 2 MVA / 690 V / 50 Hz converter of [`ParamSpec::standard`].

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::model::ParamSpec;

pub const OMEGA0: f64 = 2.0 * PI * 50.0;

/// Grid voltage during the fault in the dip scenarios (pu).
pub const DIP_VOLTAGE: f64 = 0.5;

/// Weak, moderately resistive grid with a voltage dip; `eta_pu` in multiples of ω0.
/// Pre-dip grid voltage is nominal.
pub fn dip_case(eta_pu: f64) -> ParamSpec {
    let mut s = ParamSpec {
        r_g: 0.08,
        l_g_pu: 0.2,
        v_g: 1.0,
        eta: eta_pu * OMEGA0,
        alpha: 1.0,
        p_star: 0.5,
        q_star: 0.2,
        v_star: 1.0,
        ..ParamSpec::standard()
    };
    s.phi = s.grid_angle();
    s
}

/// [`dip_case`] with a different line resistance (rotation angle re-matched).
pub fn dip_case_with_resistance(eta_pu: f64, r_g: f64) -> ParamSpec {
    let mut s = dip_case(eta_pu);
    s.r_g = r_g;
    s.phi = s.grid_angle();
    s
}

/// Highly resistive weak grid at half voltage; `alpha = 3` oscillates, `alpha = 1` settles.
pub fn resistive_grid_case(alpha: f64) -> ParamSpec {
    ParamSpec {
        r_g: 0.8,
        l_g_pu: 0.8,
        v_g: 0.5,
        eta: 0.08 * OMEGA0,
        alpha,
        phi: FRAC_PI_4,
        p_star: 0.8,
        q_star: -0.2,
        v_star: 1.0,
        ..ParamSpec::standard()
    }
}

/// Deep dip with zero setpoints, where classical droop has no steady state.
pub fn deep_dip_case() -> ParamSpec {
    ParamSpec {
        r_g: 0.4,
        l_g_pu: 0.4,
        v_g: 0.1,
        eta: 0.08 * OMEGA0,
        alpha: 1.0,
        phi: FRAC_PI_2,
        p_star: 0.0,
        q_star: 0.0,
        v_star: 1.0,
        ..ParamSpec::standard()
    }
}

/// Islanded converter on a unit reactive load (`y = −j`), zero setpoints.
pub fn islanded_case(alpha: f64) -> ParamSpec {
    ParamSpec {
        r_g: 0.0,
        l_g_pu: 1.0,
        v_g: 0.0,
        eta: 0.02 * OMEGA0,
        alpha,
        phi: FRAC_PI_2,
        p_star: 0.0,
        q_star: 0.0,
        v_star: 1.0,
        ..ParamSpec::standard()
    }
}
