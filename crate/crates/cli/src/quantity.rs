//! Numbers with explicit unit suffixes such as `"0.2 pu"` or `"0.02 x omega0"`.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Pu,
    Rad,
    Seconds,
    RadPerSecond,
    /// Multiple of the nominal angular frequency.
    TimesOmega0,
    /// Bare number.
    None,
}

impl Unit {
    pub fn suffix(self) -> &'static str {
        match self {
            Unit::Pu => "pu",
            Unit::Rad => "rad",
            Unit::Seconds => "s",
            Unit::RadPerSecond => "rad/s",
            Unit::TimesOmega0 => "x omega0",
            Unit::None => "",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        let squashed: String = s.split_whitespace().collect::<Vec<_>>().join(" ");
        Some(match squashed.as_str() {
            "pu" => Unit::Pu,
            "rad" => Unit::Rad,
            "s" => Unit::Seconds,
            "rad/s" => Unit::RadPerSecond,
            "x omega0" | "*omega0" | "* omega0" => Unit::TimesOmega0,
            "" => Unit::None,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub const fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let split = s.find(char::is_whitespace).unwrap_or(s.len());
        let (number, unit) = s.split_at(split);
        let value: f64 = number.parse().map_err(|_| format!("`{s}` does not start with a number"))?;
        if !value.is_finite() {
            return Err(format!("`{s}` is not finite"));
        }
        let unit = Unit::parse(unit.trim())
            .ok_or_else(|| format!("unknown unit `{}` (expected pu, rad, s, rad/s or x omega0)", unit.trim()))?;
        Ok(Self { value, unit })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Unit::None => write!(f, "{}", self.value),
            u => write!(f, "{} {}", self.value, u.suffix()),
        }
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.unit {
            Unit::None => s.serialize_f64(self.value),
            _ => s.collect_str(self),
        }
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct QuantityVisitor;

        impl Visitor<'_> for QuantityVisitor {
            type Value = Quantity;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"0.2 pu\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Quantity, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Quantity, E> {
                Ok(Quantity::new(v, Unit::None))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Quantity, E> {
                Ok(Quantity::new(v as f64, Unit::None))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Quantity, E> {
                Ok(Quantity::new(v as f64, Unit::None))
            }
        }

        d.deserialize_any(QuantityVisitor)
    }
}

/// Rotation angle: a fixed value or matched to the grid impedance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    GridAngle,
    Fixed(Quantity),
}

const GRID_ANGLE: &str = "grid-angle";

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Angle::GridAngle => s.serialize_str(GRID_ANGLE),
            Angle::Fixed(q) => q.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let q = AngleRepr::deserialize(d)?;
        match q {
            AngleRepr::Text(t) if t.trim() == GRID_ANGLE => Ok(Angle::GridAngle),
            AngleRepr::Text(t) => t.parse().map(Angle::Fixed).map_err(de::Error::custom),
            AngleRepr::Number(v) => Ok(Angle::Fixed(Quantity::new(v, Unit::None))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleRepr {
    Text(String),
    Number(f64),
}
