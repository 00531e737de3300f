//! Versioned JSON snapshots of a running session.
//!
//! A snapshot carries the full state, the similarity matrix and the random
//! stream position, so a restored session continues exactly where the
//! original left off.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{CorrDuel, SessionState};
use crate::error::{Error, Result};
use crate::{ArmId, SimilarityMatrix};

pub const FORMAT: &str = "corrduel-session";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub state: SessionState,
    pub similarity: SimilarityMatrix,
    pub rng: ChaCha8Rng,
    pub pending: Option<(ArmId, ArmId)>,
}

impl Snapshot {
    pub fn capture(session: &CorrDuel) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            state: session.state().clone(),
            similarity: (**session.similarity()).clone(),
            rng: session.rng().clone(),
            pending: session.pending(),
        }
    }

    pub fn restore(self) -> Result<CorrDuel> {
        if self.format != FORMAT {
            return Err(Error::Snapshot(format!("unknown format {:?}", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported version {}",
                self.version
            )));
        }
        if self.similarity.dim() != self.state.config.num_arms
            || self.state.stats.len() != self.state.config.num_arms
        {
            return Err(Error::Snapshot("arm count mismatch".into()));
        }
        Ok(CorrDuel::from_parts(
            self.state,
            Arc::new(self.similarity),
            self.rng,
            self.pending,
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))
    }
}
