//! Correlational dueling bandits.
//!
//! The [`engine`] module implements the elimination learner that spreads
//! every duel's outcome to all similar arms. [`similarity`] builds the
//! similarity matrices it consumes, [`baselines`] provides independent-arm
//! learners for comparison and [`simlab`] runs regret benchmarks on
//! Gaussian-process utility landscapes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod baselines;
pub mod confidence;
pub mod engine;
pub mod error;
mod matrix;
pub mod policy;
pub mod similarity;
pub mod simlab;
pub mod snapshot;
pub mod update;

pub use confidence::confidence_radius;
pub use engine::{
    ArmStats, CorrDuel, DuelRecord, Elimination, OutcomeSource, SessionConfig, SessionState,
    StepReport,
};
pub use error::{Error, Result};
pub use matrix::SimilarityMatrix;
pub use policy::DuelingPolicy;
pub use update::{corr_update_weights, UpdateWeights};

/// Index of an arm within a session, in `[0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
