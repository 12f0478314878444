use thiserror::Error;

use crate::hilbert::GhzLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-canonical GHZ label {given}; canonical form is {canonical}")]
    NonCanonicalLabel { given: String, canonical: GhzLabel },

    #[error("GHZ label has {got} bits, expected {expected}")]
    LabelLength { expected: usize, got: usize },

    #[error("at least two photons are required, got {0}")]
    TooFewPhotons(usize),

    #[error("states differ in shape: {0}")]
    ShapeMismatch(String),

    #[error("state is not a product across the polarization/spatial cut")]
    NotAProduct,

    #[error("probe tags are not uniform across branches")]
    ProbeTagsPending,

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("cross-Kerr coupling must be +1 or -1, got {0}")]
    InvalidCoupling(i32),

    #[error("probe {probe} holds phase tag {tag}, outside the theta measurement classes")]
    UnexpectedPhaseClass { probe: usize, tag: i32 },

    #[error("photon {0} was already measured in the single-photon Bell basis")]
    DoubleMeasurement(usize),

    #[error("state norm is {0}, expected 1")]
    NotNormalized(f64),

    #[error("state has no branches")]
    EmptyState,

    #[error("cannot parse label {0:?}")]
    BadLabel(String),
}
