use nalgebra::Vector2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Model fidelity. The discriminant is the state dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelOrder {
    Second = 2,
    Fourth = 4,
    Eighth = 8,
    Full = 12,
}

impl ModelOrder {
    pub const ALL: [ModelOrder; 4] = [Self::Second, Self::Fourth, Self::Eighth, Self::Full];

    pub fn dim(self) -> usize {
        self as usize
    }

    pub fn from_dim(dim: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.dim() == dim)
    }

    /// Canonical component names, truncated to this order.
    pub fn component_names(self) -> &'static [&'static str] {
        &STATE_NAMES[..self.dim()]
    }
}

/// Frozen state layout shared by every module:
///
/// | index | block | meaning                               |
/// |-------|-------|---------------------------------------|
/// | 0..2  | x1    | oscillator voltage reference `v̂`      |
/// | 2..4  | x2    | grid line current `i`                 |
/// | 4..6  | x3    | filter capacitor voltage `v`          |
/// | 6..8  | x3    | voltage-loop resonant state `ζ_v`     |
/// | 8..10 | x4    | filter inductor current `i_f`         |
/// | 10..12| x4    | current-loop resonant state `ζ_c`     |
///
/// All pairs are (d, q) components in the grid synchronous frame. The
/// second-order and off-grid models only carry `x1`.
pub const STATE_NAMES: [&str; 12] =
    ["vhat_d", "vhat_q", "i_d", "i_q", "v_d", "v_q", "zeta_v_d", "zeta_v_q", "if_d", "if_q", "zeta_c_d", "zeta_c_q"];

/// A dynamic model selectable for simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    Reduced(ModelOrder),
    /// Islanded second-order model in the stationary frame.
    OffGrid,
}

impl Model {
    pub fn order(self) -> ModelOrder {
        match self {
            Model::Reduced(o) => o,
            Model::OffGrid => ModelOrder::Second,
        }
    }

    pub fn dim(self) -> usize {
        self.order().dim()
    }
}

impl From<ModelOrder> for Model {
    fn from(o: ModelOrder) -> Self {
        Model::Reduced(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    order: ModelOrder,
    data: [f64; 12],
}

impl StateVector {
    pub fn zeros(order: ModelOrder) -> Self {
        Self { order, data: [0.0; 12] }
    }

    pub fn new(order: ModelOrder, values: &[f64]) -> Result<Self> {
        if values.len() != order.dim() {
            return Err(Error::OrderMismatch { expected: order.dim(), found: values.len() });
        }
        let mut data = [0.0; 12];
        data[..values.len()].copy_from_slice(values);
        Ok(Self { order, data })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let order =
            ModelOrder::from_dim(values.len()).ok_or(Error::OrderMismatch { expected: 12, found: values.len() })?;
        Self::new(order, values)
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.order.dim()]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        let n = self.order.dim();
        &mut self.data[..n]
    }

    pub fn pair(&self, index: usize) -> Vector2<f64> {
        Vector2::new(self.data[2 * index], self.data[2 * index + 1])
    }

    pub fn set_pair(&mut self, index: usize, v: Vector2<f64>) {
        self.data[2 * index] = v.x;
        self.data[2 * index + 1] = v.y;
    }

    pub fn vhat(&self) -> Vector2<f64> {
        self.pair(0)
    }

    pub fn expect_order(&self, order: ModelOrder) -> Result<()> {
        if self.order == order {
            Ok(())
        } else {
            Err(Error::OrderMismatch { expected: order.dim(), found: self.order.dim() })
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Polar description of a rotating voltage vector and its complex frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarSignals {
    pub v: f64,
    pub theta: f64,
    pub u: f64,
    pub complex_angle: Complex64,
    /// `ε + jω` where `ε = v̇/v`.
    pub complex_frequency: Complex64,
}

impl PolarSignals {
    /// From a rectangular voltage and its time derivative.
    pub fn from_rectangular(v: Vector2<f64>, v_dot: Vector2<f64>) -> Result<Self> {
        let vc = Complex64::new(v.x, v.y);
        let amp = vc.norm();
        if amp <= 0.0 {
            return Err(Error::VoltageCollapse("polar representation needs v > 0"));
        }
        let theta = vc.arg();
        let u = amp.ln();
        Ok(Self {
            v: amp,
            theta,
            u,
            complex_angle: Complex64::new(u, theta),
            complex_frequency: Complex64::new(v_dot.x, v_dot.y) / vc,
        })
    }

    pub fn rectangular(&self) -> Vector2<f64> {
        let c = self.complex_angle.exp();
        Vector2::new(c.re, c.im)
    }
}

/// Power normalized by the squared voltage amplitude: `(p/v², q/v²)`.
pub fn normalized_power(p: f64, q: f64, v: f64) -> Result<(f64, f64)> {
    if v <= 0.0 {
        return Err(Error::VoltageCollapse("normalized power undefined"));
    }
    let v2 = v * v;
    Ok((p / v2, q / v2))
}

/// `e^{j(π/2 − φ)}(p + jq)`.
pub fn rotated_power(p: f64, q: f64, phi: f64) -> (f64, f64) {
    let r = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2 - phi) * Complex64::new(p, q);
    (r.re, r.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn normalized_power_examples() {
        assert_eq!(normalized_power(1.0, 0.0, 1.0).unwrap(), (1.0, 0.0));
        assert_eq!(normalized_power(0.5, 0.2, 1.0).unwrap(), (0.5, 0.2));
        let (r, s) = normalized_power(0.8, -0.2, 0.5).unwrap();
        assert!((r - 3.2).abs() < 1e-15 && (s + 0.8).abs() < 1e-15);
        assert!(normalized_power(1.0, 0.0, 0.0).is_err());
        assert!(normalized_power(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn rotated_power_examples() {
        let (a, b) = rotated_power(0.3, -0.7, FRAC_PI_2);
        assert!((a - 0.3).abs() < 1e-15 && (b + 0.7).abs() < 1e-15);
        let (a, b) = rotated_power(1.0, 0.0, 0.0);
        assert!(a.abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        let (a, b) = rotated_power(0.5, 0.2, FRAC_PI_4);
        let c = FRAC_PI_4.cos();
        assert!((a - (0.5 * c - 0.2 * c)).abs() < 1e-15);
        assert!((b - (0.5 * c + 0.2 * c)).abs() < 1e-15);
        assert!((a - 0.2121).abs() < 1e-4 && (b - 0.4950).abs() < 1e-4);
    }

    #[test]
    fn polar_roundtrip() {
        let v = Vector2::new(0.6, -0.8);
        let s = PolarSignals::from_rectangular(v, Vector2::new(0.1, 0.2)).unwrap();
        assert!((s.rectangular() - v).abs().max() < 1e-12);
        assert!((s.v - 1.0).abs() < 1e-15);
        assert!(PolarSignals::from_rectangular(Vector2::zeros(), Vector2::zeros()).is_err());
    }

    #[test]
    fn state_layout() {
        assert!(StateVector::new(ModelOrder::Fourth, &[0.0; 3]).is_err());
        let s = StateVector::from_slice(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.order(), ModelOrder::Fourth);
        assert_eq!(s.pair(1), Vector2::new(3.0, 4.0));
        assert_eq!(ModelOrder::Eighth.component_names().last(), Some(&"zeta_v_q"));
    }
}
