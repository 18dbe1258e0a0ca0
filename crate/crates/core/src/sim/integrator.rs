//! Explicit Runge–Kutta steppers on fixed-size stack arrays.

use crate::model::{eval, Model, SystemParams};

pub(crate) const MAX_DIM: usize = 12;
pub(crate) type Buf = [f64; MAX_DIM];

/// Dormand–Prince 5(4) tableau (autonomous fields, so the nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between fifth- and fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

pub(crate) struct System<'a> {
    pub model: Model,
    pub params: &'a SystemParams,
    pub n: usize,
}

impl System<'_> {
    #[inline]
    pub fn f(&self, x: &Buf, out: &mut Buf) {
        eval(self.model, self.params, &x[..self.n], &mut out[..self.n]);
    }
}

/// One classical RK4 step in place.
pub(crate) fn rk4_step(sys: &System, x: &mut Buf, h: f64) {
    let n = sys.n;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        ([0.0; MAX_DIM], [0.0; MAX_DIM], [0.0; MAX_DIM], [0.0; MAX_DIM], [0.0; MAX_DIM]);
    sys.f(x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    sys.f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    sys.f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    sys.f(&tmp, &mut k4);
    for i in 0..n {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

pub(crate) struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    /// Proposed next step; zero before the first step.
    pub h: f64,
    /// Derivative at the current point, valid while `fsal` is set.
    k1: Buf,
    fsal: bool,
}

pub(crate) enum StepResult {
    Accepted,
    Rejected,
}

impl Dopri {
    pub fn new(rtol: f64, atol: f64, h_max: f64) -> Self {
        Self { rtol, atol, h_max, h: 0.0, k1: [0.0; MAX_DIM], fsal: false }
    }

    /// Forget the cached derivative (the vector field changed).
    pub fn reset(&mut self) {
        self.fsal = false;
    }

    fn scaled_norm(&self, n: usize, v: &Buf, x: &Buf) -> f64 {
        let s: f64 = (0..n).map(|i| (v[i] / (self.atol + self.rtol * x[i].abs())).powi(2)).sum();
        (s / n as f64).sqrt()
    }

    pub fn initial_step(&mut self, sys: &System, x: &Buf) {
        if !self.fsal {
            sys.f(x, &mut self.k1);
            self.fsal = true;
        }
        let d0 = self.scaled_norm(sys.n, x, x);
        let d1 = self.scaled_norm(sys.n, &self.k1, x);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        self.h = h0.min(self.h_max);
    }

    /// Attempt a step of size `h` from `x`; on acceptance `x` is advanced.
    /// Updates the proposal `self.h` unless `clipped` and accepted.
    pub fn try_step(&mut self, sys: &System, x: &mut Buf, h: f64, clipped: bool) -> StepResult {
        let n = sys.n;
        if !self.fsal {
            sys.f(x, &mut self.k1);
            self.fsal = true;
        }
        let mut k = [[0.0; MAX_DIM]; 7];
        k[0] = self.k1;
        let mut tmp = [0.0; MAX_DIM];
        #[allow(clippy::needless_range_loop)]
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                tmp[i] = x[i] + h * acc;
            }
            let (_, tail) = k.split_at_mut(s);
            sys.f(&tmp, &mut tail[0]);
        }
        // The last row of A carries the fifth-order weights, so tmp is the new point.
        let mut err = [0.0; MAX_DIM];
        let mut scale_ref = [0.0; MAX_DIM];
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            err[i] = h * e;
            scale_ref[i] = x[i].abs().max(tmp[i].abs());
        }
        let en = self.scaled_norm(n, &err, &scale_ref);
        let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        let proposal = (h * factor).min(self.h_max);
        if en <= 1.0 && tmp[..n].iter().all(|v| v.is_finite()) {
            x[..n].copy_from_slice(&tmp[..n]);
            self.k1 = k[6];
            if !clipped || proposal < self.h {
                self.h = proposal;
            }
            StepResult::Accepted
        } else {
            self.h = (h * factor.min(1.0)).min(self.h_max);
            if !en.is_finite() {
                self.h = 0.1 * h;
            }
            StepResult::Rejected
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_rows_are_consistent() {
        // Row sums equal the stage nodes; the error weights sum to zero.
        let nodes = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
        for (row, c) in A.iter().zip(nodes) {
            assert!((row.iter().sum::<f64>() - c).abs() < 1e-14);
        }
        assert!(E.iter().sum::<f64>().abs() < 1e-15);
    }
}
