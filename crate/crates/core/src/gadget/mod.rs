//! Desk-scale dictatorship-test gadgets over Label-Cover.

mod compose;
mod label_cover;
mod test_dist;

pub use compose::{
    compose, dictator_assignment, dictator_assignment_with, ComposeMode, ComposeParams, GadgetLayout,
    MAX_VARS,
};
pub use label_cover::{make_label_cover, Edge, LabelCoverInstance, Labeling, MAX_DR};
pub use test_dist::{
    apply_noise, fold, noisy_distribution, row_distribution, uncorrelate, FoldedPoint, NoisySampler,
    NoisyStream, MAX_SUPPORT,
};

use thiserror::Error;

use crate::distributions::DistError;
use crate::instances::InstanceError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GadgetError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("desk cap exceeded: {0}")]
    CapExceeded(String),
    #[error("no bi-regular graph with |U| = {n_u}, |V| = {n_v} and U-degree {degree}")]
    InfeasibleRegularity { n_u: usize, n_v: usize, degree: usize },
    #[error("graph is not bi-regular")]
    NotBiregular,
    #[error("edge {edge}: {reason}")]
    InvalidProjection { edge: usize, reason: String },
    #[error("planted labeling violates {0} edges")]
    LabelingNotPerfect(usize),
    #[error("Label-Cover instance has no planted labeling")]
    MissingLabeling,
    #[error("base distribution is not balanced pairwise independent over G³")]
    UnbalancedBase,
    #[error("per-edge support {support} exceeds budget {budget}; use sample mode")]
    BudgetExceeded { support: usize, budget: usize },
    #[error("noise rate {0} is outside [0, 1)")]
    InvalidNoise(f64),
    #[error("instance has block sizes {found:?}, layout expects {expected:?}")]
    LayoutMismatch { expected: [usize; 3], found: [usize; 3] },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}
