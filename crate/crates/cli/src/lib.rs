//! Scenario files, certificate reports and the runner behind the `dvoc` binary.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod presets;
pub mod quantity;
pub mod report;
pub mod run;
pub mod scenario;
