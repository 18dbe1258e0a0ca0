use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// 2×2 real matrix of the complex number `c`: `a + jb ↦ [[a, −b], [b, a]]`.
pub fn complex_matrix(c: Complex64) -> Matrix2<f64> {
    Matrix2::new(c.re, -c.im, c.im, c.re)
}

/// Rotation matrix by `angle`.
pub fn rotation(angle: f64) -> Matrix2<f64> {
    complex_matrix(Complex64::from_polar(1.0, angle))
}

/// The quarter-turn `J = [[0, −1], [1, 0]]`.
pub fn quarter_turn() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Flat, serializable description of a converter/grid system.
///
/// Reactances and susceptances are given in pu at nominal frequency; the
/// constructed [`SystemParams`] converts them to s/rad time constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub s_base: f64,
    pub v_base: f64,
    pub f_nominal: f64,
    pub r_g: f64,
    /// Grid reactance at nominal frequency (pu).
    pub l_g_pu: f64,
    pub v_g: f64,
    /// Grid frequency (pu of nominal).
    pub omega_g: f64,
    /// Power droop gain (rad/s).
    pub eta: f64,
    pub alpha: f64,
    pub phi: f64,
    pub p_star: f64,
    pub q_star: f64,
    pub v_star: f64,
    pub r_f: f64,
    pub l_f_pu: f64,
    pub g_f: f64,
    pub c_f_pu: f64,
    pub k_pv: f64,
    /// Voltage-loop resonant gain (pu/s).
    pub k_rv: f64,
    pub k_pc: f64,
    /// Current-loop resonant gain (pu/s).
    pub k_rc: f64,
}

impl ParamSpec {
    /// 2 MVA / 690 V / 50 Hz converter with the common LC filter and inner-loop
    /// gains, attached to a stiff nominal grid, droop gains left at unity.
    pub fn standard() -> Self {
        let omega0 = 2.0 * std::f64::consts::PI * 50.0;
        Self {
            s_base: 2.0e6,
            v_base: 690.0,
            f_nominal: 50.0,
            r_g: 0.08,
            l_g_pu: 0.2,
            v_g: 1.0,
            omega_g: 1.0,
            eta: 0.02 * omega0,
            alpha: 1.0,
            phi: FRAC_PI_2,
            p_star: 0.0,
            q_star: 0.0,
            v_star: 1.0,
            r_f: 0.05 / 30.0,
            l_f_pu: 0.05,
            g_f: 0.05 / 30.0,
            c_f_pu: 0.05,
            k_pv: 1.0,
            k_rv: 10.0,
            k_pc: 2.0,
            k_rc: 20.0,
        }
    }

    pub fn omega0(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_nominal
    }

    /// Rotation angle matched to the grid impedance, `atan(x_g / r_g)`.
    pub fn grid_angle(&self) -> f64 {
        self.l_g_pu.atan2(self.r_g)
    }

    pub fn build(&self) -> Result<SystemParams> {
        SystemParams::new(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerUnitBase {
    pub s_base: f64,
    pub v_base: f64,
    pub f_nominal: f64,
    pub omega0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridLink {
    pub r_g: f64,
    /// Inductance time constant (s/rad).
    pub l_g: f64,
    pub v_g: f64,
    /// Grid frequency (pu).
    pub omega_g: f64,
    pub z: Complex64,
    pub y: Complex64,
    #[serde(skip)]
    pub z_mat: Matrix2<f64>,
    #[serde(skip)]
    pub y_mat: Matrix2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerParams {
    pub eta: f64,
    pub alpha: f64,
    pub phi: f64,
    pub p_star: f64,
    pub q_star: f64,
    pub v_star: f64,
    pub omega0: f64,
    /// `omega0 − omega_g` in rad/s.
    pub omega_delta: f64,
    /// Normalized complex power setpoint `(p* − j q*) / v*²`.
    pub sigma_bar_star: Complex64,
    #[serde(skip)]
    pub s_phi_star: Matrix2<f64>,
    #[serde(skip)]
    pub r_phi: Matrix2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterAndLoops {
    pub r_f: f64,
    /// Filter inductance time constant (s/rad).
    pub l_f: f64,
    pub g_f: f64,
    /// Filter capacitance time constant (s/rad).
    pub c_f: f64,
    pub k_pv: f64,
    pub k_rv: f64,
    pub k_pc: f64,
    pub k_rc: f64,
    pub z_f: Complex64,
    pub y_f: Complex64,
    #[serde(skip)]
    pub z_f_mat: Matrix2<f64>,
    #[serde(skip)]
    pub y_f_mat: Matrix2<f64>,
}

/// Validated parameters with every derived quantity cached.
///
/// Immutable: the `with_*` methods return a rebuilt copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    pub base: PerUnitBase,
    pub grid: GridLink,
    pub ctrl: ControllerParams,
    pub filt: FilterAndLoops,
    #[serde(skip)]
    spec: ParamSpec,
    /// `e^{jφ}` as a complex number.
    #[serde(skip)]
    rot: Complex64,
    /// `e^{jφ}(ς̄* − y)`.
    #[serde(skip)]
    kappa: Complex64,
    #[serde(skip)]
    y_phi: Matrix2<f64>,
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, reason: format!("must be finite and > 0, got {v}") })
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, reason: format!("must be finite and >= 0, got {v}") })
    }
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, reason: format!("must be finite, got {v}") })
    }
}

impl SystemParams {
    pub fn new(spec: ParamSpec) -> Result<Self> {
        positive("s_base", spec.s_base)?;
        positive("v_base", spec.v_base)?;
        positive("f_nominal", spec.f_nominal)?;
        non_negative("r_g", spec.r_g)?;
        non_negative("l_g", spec.l_g_pu)?;
        non_negative("v_g", spec.v_g)?;
        positive("omega_g", spec.omega_g)?;
        positive("eta", spec.eta)?;
        non_negative("alpha", spec.alpha)?;
        finite("phi", spec.phi)?;
        if !(-1e-12..=FRAC_PI_2 + 1e-12).contains(&spec.phi) {
            return Err(Error::InvalidParameter {
                field: "phi",
                reason: format!("must lie in [0, pi/2], got {}", spec.phi),
            });
        }
        finite("p_star", spec.p_star)?;
        finite("q_star", spec.q_star)?;
        positive("v_star", spec.v_star)?;
        non_negative("r_f", spec.r_f)?;
        positive("l_f", spec.l_f_pu)?;
        non_negative("g_f", spec.g_f)?;
        positive("c_f", spec.c_f_pu)?;
        positive("k_pv", spec.k_pv)?;
        positive("k_rv", spec.k_rv)?;
        positive("k_pc", spec.k_pc)?;
        positive("k_rc", spec.k_rc)?;

        let omega0 = spec.omega0();
        let base = PerUnitBase { s_base: spec.s_base, v_base: spec.v_base, f_nominal: spec.f_nominal, omega0 };

        let omega_g_rad = spec.omega_g * omega0;
        let l_g = spec.l_g_pu / omega0;
        let z = Complex64::new(spec.r_g, omega_g_rad * l_g);
        if z.norm() == 0.0 {
            return Err(Error::InvalidParameter { field: "l_g", reason: "grid impedance |z| must be > 0".into() });
        }
        let y = z.inv();
        let grid = GridLink {
            r_g: spec.r_g,
            l_g,
            v_g: spec.v_g,
            omega_g: spec.omega_g,
            z,
            y,
            z_mat: complex_matrix(z),
            y_mat: complex_matrix(y),
        };

        let rot = Complex64::from_polar(1.0, spec.phi);
        let sigma_bar_star = Complex64::new(spec.p_star, -spec.q_star) / (spec.v_star * spec.v_star);
        let ctrl = ControllerParams {
            eta: spec.eta,
            alpha: spec.alpha,
            phi: spec.phi,
            p_star: spec.p_star,
            q_star: spec.q_star,
            v_star: spec.v_star,
            omega0,
            omega_delta: omega0 - omega_g_rad,
            sigma_bar_star,
            s_phi_star: complex_matrix(rot * sigma_bar_star),
            r_phi: complex_matrix(rot),
        };

        let l_f = spec.l_f_pu / omega0;
        let c_f = spec.c_f_pu / omega0;
        let z_f = Complex64::new(spec.r_f, omega_g_rad * l_f);
        let y_f = Complex64::new(spec.g_f, omega_g_rad * c_f);
        let filt = FilterAndLoops {
            r_f: spec.r_f,
            l_f,
            g_f: spec.g_f,
            c_f,
            k_pv: spec.k_pv,
            k_rv: spec.k_rv,
            k_pc: spec.k_pc,
            k_rc: spec.k_rc,
            z_f,
            y_f,
            z_f_mat: complex_matrix(z_f),
            y_f_mat: complex_matrix(y_f),
        };

        Ok(Self {
            base,
            grid,
            ctrl,
            filt,
            spec,
            rot,
            kappa: rot * (sigma_bar_star - y),
            y_phi: ctrl.r_phi * grid.y_mat,
        })
    }

    pub fn spec(&self) -> &ParamSpec {
        &self.spec
    }

    /// Rebuild with a modified copy of the flat description.
    pub fn modified(&self, edit: impl FnOnce(&mut ParamSpec)) -> Result<Self> {
        let mut spec = self.spec;
        edit(&mut spec);
        Self::new(spec)
    }

    pub fn with_grid_voltage(&self, v_g: f64) -> Result<Self> {
        self.modified(|s| s.v_g = v_g)
    }

    pub fn with_grid_frequency(&self, omega_g: f64) -> Result<Self> {
        self.modified(|s| s.omega_g = omega_g)
    }

    pub fn with_setpoints(&self, p_star: f64, q_star: f64, v_star: f64) -> Result<Self> {
        self.modified(|s| {
            s.p_star = p_star;
            s.q_star = q_star;
            s.v_star = v_star;
        })
    }

    /// `e^{jφ}`.
    pub fn rotator(&self) -> Complex64 {
        self.rot
    }

    /// `e^{jφ}(ς̄* − y)`, the complex form of `S_φ* − Y_φ`.
    pub fn kappa_complex(&self) -> Complex64 {
        self.kappa
    }

    /// `Y_φ = R_φ·Y`.
    pub fn y_phi(&self) -> Matrix2<f64> {
        self.y_phi
    }

    /// `ωΔ / η`.
    pub fn detuning(&self) -> f64 {
        self.ctrl.omega_delta / self.ctrl.eta
    }

    /// Rotated grid-impedance angle `∠z − φ`.
    pub fn rotated_impedance_angle(&self) -> f64 {
        self.grid.z.arg() - self.ctrl.phi
    }
}
