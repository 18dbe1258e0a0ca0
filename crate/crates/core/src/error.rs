use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("state has order {found}, expected {expected}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("voltage collapse: {0}")]
    VoltageCollapse(&'static str),

    #[error("degenerate: {0}")]
    Degenerate(&'static str),

    #[error("spurious root: not an equilibrium (trig inconsistency {0:.3e})")]
    SpuriousRoot(f64),

    #[error("theorem inapplicable: {0}")]
    TheoremInapplicable(&'static str),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no neighborhood exists for epsilon = {0} (requires epsilon > 3)")]
    NoNeighborhood(f64),

    #[error("invalid integrator configuration: {0}")]
    Config(String),
}
