//! Session events as stored in the append-only JSONL log.

use corrduel::similarity::ElectrodeConfig;
use corrduel::{ArmId, SessionConfig, SimilarityMatrix};
use serde::{Deserialize, Serialize};

/// One entry of the arm catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmEntry {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrode: Option<ElectrodeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilaritySource {
    Inline,
    Electrode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    Created {
        session_id: String,
        arms: Vec<ArmEntry>,
        similarity: SimilarityMatrix,
        similarity_source: SimilaritySource,
        config: SessionConfig,
        tie_seed: u64,
    },
    Proposed {
        arm_a: ArmId,
        arm_b: ArmId,
        iteration: u64,
    },
    TieResolved {
        arm_a: ArmId,
        arm_b: ArmId,
        winner: ArmId,
    },
    Outcome {
        winner: ArmId,
        loser: ArmId,
        iteration: u64,
    },
    Eliminated {
        arm: ArmId,
        round: u64,
        iteration: u64,
    },
    Completed {
        best_arm: ArmId,
        iteration: u64,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Created { .. } => "created",
            Self::Proposed { .. } => "proposed",
            Self::TieResolved { .. } => "tie_resolved",
            Self::Outcome { .. } => "outcome",
            Self::Eliminated { .. } => "eliminated",
            Self::Completed { .. } => "completed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SessionEvent {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event serialization is infallible")
    }
}
