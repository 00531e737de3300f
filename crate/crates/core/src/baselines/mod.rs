//! Independent-arm dueling baselines and a name-based policy factory.

mod btm;
mod rucb;
mod sparring;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use btm::{BeatTheMean, BtmStep};
pub use rucb::{Rucb, DEFAULT_ALPHA};
pub use sparring::{ucb1_index, SparringUcb1};

use crate::engine::{CorrDuel, SessionConfig};
use crate::error::{Error, Result};
use crate::policy::DuelingPolicy;
use crate::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    CorrDuel,
    Btm,
    Rucb,
    SparringUcb1,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [Self::CorrDuel, Self::Btm, Self::Rucb, Self::SparringUcb1];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CorrDuel => "corrduel",
            Self::Btm => "btm",
            Self::Rucb => "rucb",
            Self::SparringUcb1 => "sparring-ucb1",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown policy {s:?}; expected one of corrduel, btm, rucb, sparring-ucb1"
                ))
            })
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(k: PolicyKind) -> Self {
        k.as_str().to_string()
    }
}

/// Everything needed to instantiate any policy on one problem.
#[derive(Debug, Clone)]
pub struct PolicySetup {
    pub num_arms: usize,
    /// Required by the correlational engine only.
    pub similarity: Option<Arc<SimilarityMatrix>>,
    pub horizon: u64,
    /// Elimination confidence; `None` uses the horizon/arm-count default.
    pub delta: Option<f64>,
    pub rucb_alpha: f64,
    pub seed: u64,
}

impl PolicySetup {
    pub fn build(&self, kind: PolicyKind) -> Result<Box<dyn DuelingPolicy>> {
        let k = self.num_arms;
        Ok(match kind {
            PolicyKind::CorrDuel => {
                let mut config = SessionConfig::new(k, self.horizon, self.seed);
                if let Some(d) = self.delta {
                    config = config.with_delta(d);
                }
                let similarity = self
                    .similarity
                    .clone()
                    .ok_or_else(|| Error::Config("corrduel needs a similarity matrix".into()))?;
                Box::new(CorrDuel::new(config, similarity)?)
            }
            PolicyKind::Btm => Box::new(BeatTheMean::new(k, self.horizon, self.delta, self.seed)?),
            PolicyKind::Rucb => Box::new(Rucb::new(k, self.rucb_alpha, self.seed)?),
            PolicyKind::SparringUcb1 => Box::new(SparringUcb1::new(k, self.seed)?),
        })
    }
}
