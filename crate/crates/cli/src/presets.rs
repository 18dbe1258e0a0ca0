//! Scenarios bundled with the binary.

use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! preset {
    ($name:literal) => {
        Preset { name: $name, source: include_str!(concat!("../presets/", $name, ".toml")) }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("caseI_slow"),
    preset!("caseI_fast"),
    preset!("caseII_boundary"),
    preset!("caseIII_cycle"),
    preset!("caseIII_stable"),
    preset!("example3"),
    preset!("example4_roa"),
    preset!("offgrid_hopf"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

impl Preset {
    pub fn scenario(&self) -> Result<Scenario, ScenarioError> {
        Scenario::parse(self.source)
    }
}
