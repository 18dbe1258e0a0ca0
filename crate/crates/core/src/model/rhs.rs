//! Vector fields for every model order, written in complex (d + jq) form.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use super::{Model, ModelOrder, StateVector, SystemParams};
use crate::Result;

const J: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
fn get(x: &[f64], pair: usize) -> Complex64 {
    Complex64::new(x[2 * pair], x[2 * pair + 1])
}

#[inline]
fn put(dx: &mut [f64], pair: usize, c: Complex64) {
    dx[2 * pair] = c.re;
    dx[2 * pair + 1] = c.im;
}

pub(crate) fn c2v(c: Complex64) -> Vector2<f64> {
    Vector2::new(c.re, c.im)
}

pub(crate) fn v2c(v: Vector2<f64>) -> Complex64 {
    Complex64::new(v.x, v.y)
}

/// Amplitude deviation factor `(v*² − ‖v‖²)/v*²`.
#[inline]
fn amplitude_error(p: &SystemParams, v: Complex64) -> f64 {
    let vs2 = p.ctrl.v_star * p.ctrl.v_star;
    (vs2 - v.norm_sqr()) / vs2
}

/// Oscillator dynamics fed by a line current `i`.
#[inline]
fn oscillator(p: &SystemParams, vhat: Complex64, i: Complex64) -> Complex64 {
    let c = &p.ctrl;
    let rot = p.rotator();
    J * c.omega_delta * vhat + c.eta * rot * c.sigma_bar_star * vhat - c.eta * rot * i
        + c.eta * c.alpha * amplitude_error(p, vhat) * vhat
}

#[inline]
fn line(p: &SystemParams, i: Complex64, v: Complex64) -> Complex64 {
    (-p.grid.z * i + v - p.grid.v_g) / p.grid.l_g
}

/// Algebraic current reference `i_f* = −k_pv(v − v̂) − k_rv ζ_v + Y_f v + i`.
#[inline]
fn current_ref(p: &SystemParams, vhat: Complex64, i: Complex64, v: Complex64, zeta_v: Complex64) -> Complex64 {
    let f = &p.filt;
    -f.k_pv * (v - vhat) - f.k_rv * zeta_v + f.y_f * v + i
}

/// Evaluate the vector field of `model` into `dx` (slices of the model dimension).
pub fn eval(model: Model, p: &SystemParams, x: &[f64], dx: &mut [f64]) {
    let wd = p.ctrl.omega_delta;
    match model {
        Model::Reduced(ModelOrder::Second) => {
            let v = get(x, 0);
            let c = &p.ctrl;
            let dv = (J * wd + c.eta * p.kappa_complex() + c.eta * c.alpha * amplitude_error(p, v)) * v
                + c.eta * p.rotator() * p.grid.y * p.grid.v_g;
            put(dx, 0, dv);
        }
        Model::Reduced(ModelOrder::Fourth) => {
            let vhat = get(x, 0);
            let i = get(x, 1);
            put(dx, 0, oscillator(p, vhat, i));
            put(dx, 1, line(p, i, vhat));
        }
        Model::Reduced(ModelOrder::Eighth) => {
            let (vhat, i, v, zv) = (get(x, 0), get(x, 1), get(x, 2), get(x, 3));
            let f = &p.filt;
            put(dx, 0, oscillator(p, vhat, i));
            put(dx, 1, line(p, i, v));
            put(dx, 2, (-f.k_pv * (v - vhat) - f.k_rv * zv) / f.c_f);
            put(dx, 3, J * wd * zv + v - vhat);
        }
        Model::Reduced(ModelOrder::Full) => {
            let (vhat, i, v, zv, i_f, zc) = (get(x, 0), get(x, 1), get(x, 2), get(x, 3), get(x, 4), get(x, 5));
            let f = &p.filt;
            let i_ref = current_ref(p, vhat, i, v, zv);
            put(dx, 0, oscillator(p, vhat, i));
            put(dx, 1, line(p, i, v));
            put(dx, 2, (-f.y_f * v - i + i_f) / f.c_f);
            put(dx, 3, J * wd * zv + v - vhat);
            put(dx, 4, (-f.k_pc * (i_f - i_ref) - f.k_rc * zc) / f.l_f);
            put(dx, 5, J * wd * zc + i_f - i_ref);
        }
        Model::OffGrid => {
            let v = get(x, 0);
            let c = &p.ctrl;
            let vs2 = c.v_star * c.v_star;
            let dv =
                (J * c.omega0 + c.eta * (p.kappa_complex() + c.alpha)) * v - c.eta * c.alpha / vs2 * v.norm_sqr() * v;
            put(dx, 0, dv);
        }
    }
}

fn eval_checked(model: Model, state: &StateVector, p: &SystemParams) -> Result<StateVector> {
    state.expect_order(model.order())?;
    let mut out = StateVector::zeros(model.order());
    eval(model, p, state.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// Reduced second-order (oscillator-only) model with quasi-static line.
pub fn rhs_second_order(state: &StateVector, p: &SystemParams) -> Result<StateVector> {
    eval_checked(Model::Reduced(ModelOrder::Second), state, p)
}

/// Oscillator plus line dynamics, filter and inner loops ideal.
pub fn rhs_fourth_order(state: &StateVector, p: &SystemParams) -> Result<StateVector> {
    eval_checked(Model::Reduced(ModelOrder::Fourth), state, p)
}

/// Adds capacitor and voltage-loop dynamics with an ideal current loop.
pub fn rhs_eighth_order(state: &StateVector, p: &SystemParams) -> Result<StateVector> {
    eval_checked(Model::Reduced(ModelOrder::Eighth), state, p)
}

/// Oscillator, line, LC filter and both cascaded loops.
pub fn rhs_full_order(state: &StateVector, p: &SystemParams) -> Result<StateVector> {
    eval_checked(Model::Reduced(ModelOrder::Full), state, p)
}

/// Islanded model (`v_g = 0`) in the stationary frame.
pub fn rhs_off_grid(state: &StateVector, p: &SystemParams) -> Result<StateVector> {
    eval_checked(Model::OffGrid, state, p)
}

/// Polar form of the second-order model: returns `(v̇, θ̇)` in the grid frame.
pub fn rhs_polar(v: f64, theta: f64, p: &SystemParams) -> Result<(f64, f64)> {
    if v <= 0.0 {
        return Err(crate::Error::VoltageCollapse("polar model needs v > 0"));
    }
    let c = &p.ctrl;
    let vc = Complex64::from_polar(v, theta);
    let i = p.grid.y * (vc - p.grid.v_g);
    let rot = p.rotator();
    let set = rot * c.sigma_bar_star;
    let meas = rot * i / vc;
    let vs2 = c.v_star * c.v_star;
    let v_dot = v * (c.eta * (set.re - meas.re) + c.eta * c.alpha * (vs2 - v * v) / vs2);
    let theta_dot = c.omega_delta + c.eta * (set.im - meas.im);
    Ok((v_dot, theta_dot))
}

/// Jacobian of the second-order model at voltage `v`.
pub fn jacobian_second_order(p: &SystemParams, v: Vector2<f64>) -> Matrix2<f64> {
    let c = &p.ctrl;
    let k = p.kappa_complex();
    let vs2 = c.v_star * c.v_star;
    let ea = c.eta * c.alpha;
    let base = ea * (1.0 - v.norm_squared() / vs2);
    Matrix2::new(
        c.eta * k.re + base - 2.0 * ea * v.x * v.x / vs2,
        -c.omega_delta - c.eta * k.im - 2.0 * ea * v.x * v.y / vs2,
        c.omega_delta + c.eta * k.im - 2.0 * ea * v.x * v.y / vs2,
        c.eta * k.re + base - 2.0 * ea * v.y * v.y / vs2,
    )
}

/// Line-current steady-state map `Y(v̂ − v_g)`.
pub fn line_current_map(p: &SystemParams, vhat: Vector2<f64>) -> Vector2<f64> {
    c2v(p.grid.y * (v2c(vhat) - p.grid.v_g))
}

/// Inductor-current reference for given states.
pub fn inductor_current_ref(
    p: &SystemParams,
    vhat: Vector2<f64>,
    i: Vector2<f64>,
    v: Vector2<f64>,
    zeta_v: Vector2<f64>,
) -> Vector2<f64> {
    c2v(current_ref(p, v2c(vhat), v2c(i), v2c(v), v2c(zeta_v)))
}

/// Lift a lower-order state to `target` by placing every added block on its
/// steady-state map (line current `Y(v̂ − v_g)`, capacitor `(v̂, 0)`,
/// inductor `(i_f*, 0)`).
pub fn lift_to(state: &StateVector, target: ModelOrder, p: &SystemParams) -> StateVector {
    let mut out = StateVector::zeros(target);
    let n = state.order().dim().min(target.dim());
    out.as_mut_slice()[..n].copy_from_slice(&state.as_slice()[..n]);
    let vhat = out.vhat();
    if state.order().dim() < 4 && target.dim() >= 4 {
        out.set_pair(1, line_current_map(p, vhat));
    }
    if state.order().dim() < 8 && target.dim() >= 8 {
        out.set_pair(2, vhat);
        out.set_pair(3, Vector2::zeros());
    }
    if state.order().dim() < 12 && target.dim() >= 12 {
        let i_ref = inductor_current_ref(p, vhat, out.pair(1), out.pair(2), out.pair(3));
        out.set_pair(4, i_ref);
        out.set_pair(5, Vector2::zeros());
    }
    out
}

/// Terminal voltage and grid current seen by the power measurement.
pub fn terminal_quantities(model: Model, p: &SystemParams, x: &[f64]) -> (Complex64, Complex64) {
    match model {
        Model::Reduced(ModelOrder::Second) | Model::OffGrid => {
            let v = get(x, 0);
            let vg = if matches!(model, Model::OffGrid) { 0.0 } else { p.grid.v_g };
            (v, p.grid.y * (v - vg))
        }
        Model::Reduced(ModelOrder::Fourth) => (get(x, 0), get(x, 1)),
        Model::Reduced(_) => (get(x, 2), get(x, 1)),
    }
}
