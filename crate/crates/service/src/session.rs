//! A live session: the engine, its arm catalog and its event history.
//!
//! Every mutation goes through [`LiveSession::execute`], which returns the
//! events it produced. Replay feeds the commands implied by a stored log back
//! through the same path and requires the regenerated events to match the
//! stored ones exactly.

use std::sync::Arc;

use corrduel::simlab::derive_seed;
use corrduel::snapshot::Snapshot;
use corrduel::{ArmId, CorrDuel, Elimination, SessionConfig, SimilarityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::event::{ArmEntry, EventKind, SessionEvent, SimilaritySource};

const TIE_STREAM: u64 = 0x7469_6573;

/// What the operator reported for the pending duel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Winner(ArmId),
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Propose,
    Report(Outcome),
}

/// Everything needed to open a session.
#[derive(Debug, Clone)]
pub struct SessionSpec {
    pub arms: Vec<ArmEntry>,
    pub similarity: SimilarityMatrix,
    pub similarity_source: SimilaritySource,
    pub config: SessionConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProposalView {
    Pending {
        arm_a: ArmId,
        arm_b: ArmId,
        labels: [String; 2],
        t: u64,
        active_count: usize,
    },
    Completed {
        best_arm: ArmId,
        label: String,
        t: u64,
        active_count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmView {
    pub arm: ArmId,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrode: Option<String>,
    pub win_rate: f64,
    pub wins: f64,
    pub plays: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationView {
    pub arm: ArmId,
    pub label: String,
    pub round: u64,
    pub iteration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub status: Status,
    pub t: u64,
    pub horizon: u64,
    pub delta: f64,
    pub round: u64,
    pub min_plays: f64,
    pub confidence: f64,
    pub active: Vec<ArmView>,
    pub eliminated: Vec<EliminationView>,
    pub best_arm: ArmId,
    pub pending: Option<(ArmId, ArmId)>,
    pub event_count: u64,
    pub created_ms: u64,
    pub updated_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub iteration: u64,
    pub pair: (ArmId, ArmId),
    pub winner: ArmId,
    pub tie_resolved: bool,
    pub eliminated: Option<ArmId>,
    pub completed: bool,
    pub state: StateView,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandResult {
    Proposal(ProposalView),
    Outcome(Box<OutcomeReport>),
}

#[derive(Debug, Clone)]
pub struct LiveSession {
    id: String,
    arms: Vec<ArmEntry>,
    engine: CorrDuel,
    tie_rng: ChaCha8Rng,
    events: Vec<SessionEvent>,
}

impl PartialEq for LiveSession {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.arms == other.arms
            && self.tie_rng == other.tie_rng
            && self.events == other.events
            && Snapshot::capture(&self.engine) == Snapshot::capture(&other.engine)
    }
}

impl LiveSession {
    /// Opens a session and logs its `created` event.
    pub fn create(id: String, spec: SessionSpec, now_ms: u64) -> Result<Self> {
        if spec.arms.len() != spec.similarity.dim() {
            return Err(ServiceError::validation(
                "similarity",
                format!(
                    "matrix is {0}x{0} but {1} arms were given",
                    spec.similarity.dim(),
                    spec.arms.len()
                ),
            ));
        }
        let tie_seed = derive_seed(spec.config.rng_seed, TIE_STREAM, 0);
        let created = EventKind::Created {
            session_id: id.clone(),
            arms: spec.arms,
            similarity: spec.similarity,
            similarity_source: spec.similarity_source,
            config: spec.config,
            tie_seed,
        };
        let mut session = Self::from_created(&created)?;
        session.events.push(SessionEvent {
            seq: 0,
            timestamp_ms: now_ms,
            kind: created,
        });
        Ok(session)
    }

    fn from_created(kind: &EventKind) -> Result<Self> {
        let EventKind::Created {
            session_id,
            arms,
            similarity,
            config,
            tie_seed,
            ..
        } = kind
        else {
            return Err(ServiceError::replay(0, "first event must be `created`"));
        };
        let engine = CorrDuel::new(*config, Arc::new(similarity.clone())).map_err(config_error)?;
        Ok(Self {
            id: session_id.clone(),
            arms: arms.clone(),
            engine,
            tie_rng: ChaCha8Rng::seed_from_u64(*tie_seed),
            events: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn arms(&self) -> &[ArmEntry] {
        &self.arms
    }

    pub fn engine(&self) -> &CorrDuel {
        &self.engine
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn similarity(&self) -> &SimilarityMatrix {
        self.engine.similarity()
    }

    pub fn similarity_source(&self) -> SimilaritySource {
        match self.events[0].kind {
            EventKind::Created {
                similarity_source, ..
            } => similarity_source,
            _ => unreachable!("the first event is always `created`"),
        }
    }

    pub fn created_ms(&self) -> u64 {
        self.events.first().map_or(0, |e| e.timestamp_ms)
    }

    pub fn updated_ms(&self) -> u64 {
        self.events.last().map_or(0, |e| e.timestamp_ms)
    }

    fn label(&self, arm: ArmId) -> String {
        self.arms[arm.0].label.clone()
    }

    /// Runs one command, appending any events it produces. Commands are
    /// validated before anything is mutated, so a rejected command leaves the
    /// session untouched.
    pub fn execute(
        &mut self,
        command: Command,
        now_ms: u64,
    ) -> Result<(CommandResult, Vec<SessionEvent>)> {
        let start = self.events.len();
        let result = match command {
            Command::Propose => CommandResult::Proposal(self.propose(now_ms)?),
            Command::Report(outcome) => {
                CommandResult::Outcome(Box::new(self.report(outcome, now_ms)?))
            }
        };
        Ok((result, self.events[start..].to_vec()))
    }

    fn push(&mut self, now_ms: u64, kind: EventKind) {
        let seq = self.events.len() as u64;
        self.events.push(SessionEvent {
            seq,
            timestamp_ms: now_ms,
            kind,
        });
    }

    fn propose(&mut self, now_ms: u64) -> Result<ProposalView> {
        let t = self.engine.state().iteration;
        let active_count = self.engine.state().active.len();
        if self.engine.is_complete() {
            let best_arm = self.engine.best_arm();
            return Ok(ProposalView::Completed {
                best_arm,
                label: self.label(best_arm),
                t,
                active_count,
            });
        }
        let fresh = self.engine.pending().is_none();
        let (arm_a, arm_b) = self.engine.propose().map_err(internal)?;
        if fresh {
            self.push(
                now_ms,
                EventKind::Proposed {
                    arm_a,
                    arm_b,
                    iteration: t,
                },
            );
        }
        Ok(ProposalView::Pending {
            arm_a,
            arm_b,
            labels: [self.label(arm_a), self.label(arm_b)],
            t,
            active_count,
        })
    }

    fn report(&mut self, outcome: Outcome, now_ms: u64) -> Result<OutcomeReport> {
        let Some((arm_a, arm_b)) = self.engine.pending() else {
            return Err(ServiceError::Conflict(if self.engine.is_complete() {
                "session is complete".into()
            } else {
                "no proposal is pending".into()
            }));
        };
        let winner = match outcome {
            Outcome::Winner(w) if w == arm_a || w == arm_b => w,
            Outcome::Winner(w) => {
                return Err(ServiceError::validation(
                    "winner",
                    format!("arm {w} is not in the pending pair ({arm_a}, {arm_b})"),
                ))
            }
            Outcome::Tie => {
                let winner = if self.tie_rng.random_bool(0.5) {
                    arm_a
                } else {
                    arm_b
                };
                self.push(
                    now_ms,
                    EventKind::TieResolved {
                        arm_a,
                        arm_b,
                        winner,
                    },
                );
                winner
            }
        };
        let step = self.engine.record(winner).map_err(internal)?;
        let loser = if winner == arm_a { arm_b } else { arm_a };
        let iteration = self.engine.state().iteration;
        self.push(
            now_ms,
            EventKind::Outcome {
                winner,
                loser,
                iteration,
            },
        );
        if let Some(arm) = step.eliminated {
            let Elimination {
                round, iteration, ..
            } = *self
                .engine
                .state()
                .eliminated
                .last()
                .expect("an elimination was just recorded");
            self.push(
                now_ms,
                EventKind::Eliminated {
                    arm,
                    round,
                    iteration,
                },
            );
        }
        let completed = self.engine.is_complete();
        if completed {
            let best_arm = self.engine.best_arm();
            self.push(
                now_ms,
                EventKind::Completed {
                    best_arm,
                    iteration,
                },
            );
        }
        Ok(OutcomeReport {
            iteration,
            pair: step.pair,
            winner,
            tie_resolved: outcome == Outcome::Tie,
            eliminated: step.eliminated,
            completed,
            state: self.state_view(),
        })
    }

    pub fn state_view(&self) -> StateView {
        let s = self.engine.state();
        StateView {
            session_id: self.id.clone(),
            status: if s.is_complete() {
                Status::Completed
            } else {
                Status::Active
            },
            t: s.iteration,
            horizon: s.config.horizon,
            delta: s.config.delta,
            round: s.round,
            min_plays: s.min_plays(),
            confidence: s.confidence(),
            active: s
                .active
                .iter()
                .map(|&arm| ArmView {
                    arm,
                    label: self.label(arm),
                    electrode: self.arms[arm.0].electrode.as_ref().map(|e| e.to_string()),
                    win_rate: s.win_rate(arm),
                    wins: s.stats[arm.0].wins,
                    plays: s.stats[arm.0].plays,
                })
                .collect(),
            eliminated: s
                .eliminated
                .iter()
                .map(|e| EliminationView {
                    arm: e.arm,
                    label: self.label(e.arm),
                    round: e.round,
                    iteration: e.iteration,
                })
                .collect(),
            best_arm: s.best_arm(),
            pending: self.engine.pending(),
            event_count: self.events.len() as u64,
            created_ms: self.created_ms(),
            updated_ms: self.updated_ms(),
        }
    }

    /// Rebuilds a session from its event log, re-executing every command and
    /// checking that it regenerates the stored events.
    pub fn replay(events: &[SessionEvent]) -> Result<Self> {
        let first = events
            .first()
            .ok_or_else(|| ServiceError::replay(0, "log is empty"))?;
        if first.seq != 0 {
            return Err(ServiceError::replay(
                0,
                format!("log starts at seq {}", first.seq),
            ));
        }
        let mut session = Self::from_created(&first.kind)?;
        session.events.push(first.clone());
        let mut i = 1;
        while i < events.len() {
            let ev = &events[i];
            let expected_seq = i as u64;
            if ev.seq != expected_seq {
                return Err(ServiceError::replay(
                    expected_seq,
                    format!(
                        "sequence gap: found seq {} where {expected_seq} was expected",
                        ev.seq
                    ),
                ));
            }
            let command = match &ev.kind {
                EventKind::Proposed { .. } => Command::Propose,
                EventKind::TieResolved { .. } => Command::Report(Outcome::Tie),
                EventKind::Outcome { winner, .. } => Command::Report(Outcome::Winner(*winner)),
                other => {
                    return Err(ServiceError::replay(
                        expected_seq,
                        format!("unexpected `{}` event", other.name()),
                    ))
                }
            };
            let (_, produced) = session
                .execute(command, ev.timestamp_ms)
                .map_err(|e| ServiceError::replay(expected_seq, e.to_string()))?;
            if produced.is_empty() {
                return Err(ServiceError::replay(
                    expected_seq,
                    "event has no effect on the session",
                ));
            }
            for (offset, made) in produced.iter().enumerate() {
                let seq = expected_seq + offset as u64;
                match events.get(i + offset) {
                    Some(stored) if stored == made => {}
                    Some(stored) if stored.seq != seq => {
                        return Err(ServiceError::replay(
                            seq,
                            format!(
                                "sequence gap: found seq {} where {seq} was expected",
                                stored.seq
                            ),
                        ))
                    }
                    Some(stored) => {
                        return Err(ServiceError::replay(
                            seq,
                            format!(
                                "stored `{}` event disagrees with the replayed `{}` event",
                                stored.kind.name(),
                                made.kind.name()
                            ),
                        ))
                    }
                    None => {
                        return Err(ServiceError::replay(
                            seq,
                            format!("log ends before the `{}` event", made.kind.name()),
                        ))
                    }
                }
            }
            i += produced.len();
        }
        Ok(session)
    }
}

fn config_error(e: corrduel::Error) -> ServiceError {
    match e {
        corrduel::Error::Similarity { row, col, reason } => {
            ServiceError::validation(format!("similarity[{row}][{col}]"), reason)
        }
        corrduel::Error::Config(msg) if msg.contains("delta") => {
            ServiceError::validation("delta", msg)
        }
        corrduel::Error::Config(msg) if msg.contains("arms") => {
            ServiceError::validation("arms", msg)
        }
        other => ServiceError::validation("config", other.to_string()),
    }
}

fn internal(e: corrduel::Error) -> ServiceError {
    ServiceError::Internal(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, horizon: u64, seed: u64) -> SessionSpec {
        SessionSpec {
            arms: (0..k)
                .map(|i| ArmEntry {
                    label: format!("arm-{i}"),
                    electrode: None,
                })
                .collect(),
            similarity: SimilarityMatrix::from_fn(k, |i, j| {
                0.8f64.powi((i as i32 - j as i32).abs())
            })
            .unwrap(),
            similarity_source: SimilaritySource::Inline,
            config: SessionConfig::new(k, horizon, seed).with_delta(0.05),
        }
    }

    fn pending(session: &mut LiveSession) -> (ArmId, ArmId) {
        match session.execute(Command::Propose, 1).unwrap().0 {
            CommandResult::Proposal(ProposalView::Pending { arm_a, arm_b, .. }) => (arm_a, arm_b),
            other => panic!("expected a pending proposal, got {other:?}"),
        }
    }

    #[test]
    fn fresh_state_is_uninformed() {
        let s = LiveSession::create("s".into(), spec(3, 10, 0), 5).unwrap();
        let v = s.state_view();
        assert_eq!(v.round, 1);
        assert_eq!(v.confidence, 1.0);
        assert!(v.active.iter().all(|a| a.win_rate == 0.5 && a.plays == 0.0));
        assert_eq!(s.events().len(), 1);
        assert_eq!(s.events()[0].kind.name(), "created");
    }

    #[test]
    fn proposal_is_idempotent() {
        let mut s = LiveSession::create("s".into(), spec(4, 10, 3), 0).unwrap();
        let a = pending(&mut s);
        let b = pending(&mut s);
        assert_eq!(a, b);
        assert_eq!(s.events().len(), 2);
    }

    #[test]
    fn winner_increments_counters() {
        let mut s = LiveSession::create("s".into(), spec(4, 10, 3), 0).unwrap();
        let (a, _) = pending(&mut s);
        let before = s.engine().state().stats[a.0];
        let (res, events) = s.execute(Command::Report(Outcome::Winner(a)), 2).unwrap();
        let CommandResult::Outcome(r) = res else {
            panic!()
        };
        assert_eq!(r.state.t, 1);
        assert_eq!(s.engine().state().stats[a.0].wins, before.wins + 1.0);
        assert_eq!(events.len(), 1);
    }

    #[test]
    fn tie_logs_one_resolution() {
        let mut s = LiveSession::create("s".into(), spec(4, 10, 3), 0).unwrap();
        let (a, b) = pending(&mut s);
        let (_, events) = s.execute(Command::Report(Outcome::Tie), 2).unwrap();
        assert_eq!(events[0].kind.name(), "tie_resolved");
        assert_eq!(events[1].kind.name(), "outcome");
        assert_eq!(
            events
                .iter()
                .filter(|e| e.kind.name() == "tie_resolved")
                .count(),
            1
        );
        let EventKind::TieResolved { winner, .. } = events[0].kind else {
            panic!()
        };
        assert!(winner == a || winner == b);
    }

    #[test]
    fn outcome_without_proposal_conflicts() {
        let mut s = LiveSession::create("s".into(), spec(3, 10, 0), 0).unwrap();
        let err = s
            .execute(Command::Report(Outcome::Winner(ArmId(0))), 1)
            .unwrap_err();
        assert!(matches!(err, ServiceError::Conflict(_)));
        assert_eq!(s.events().len(), 1);
    }

    #[test]
    fn foreign_winner_is_rejected_without_side_effects() {
        let mut s = LiveSession::create("s".into(), spec(5, 10, 1), 0).unwrap();
        let (a, b) = pending(&mut s);
        let other = (0..5).map(ArmId).find(|x| *x != a && *x != b).unwrap();
        let before = s.clone();
        let err = s
            .execute(Command::Report(Outcome::Winner(other)), 1)
            .unwrap_err();
        assert!(matches!(err, ServiceError::Validation { ref field, .. } if field == "winner"));
        assert_eq!(s, before);
    }

    #[test]
    fn horizon_reached_yields_completed_payload() {
        let mut s = LiveSession::create("s".into(), spec(3, 2, 0), 0).unwrap();
        for _ in 0..2 {
            let (a, _) = pending(&mut s);
            s.execute(Command::Report(Outcome::Winner(a)), 1).unwrap();
        }
        assert_eq!(s.events().last().unwrap().kind.name(), "completed");
        match s.execute(Command::Propose, 2).unwrap().0 {
            CommandResult::Proposal(ProposalView::Completed { best_arm, t, .. }) => {
                assert_eq!(best_arm, s.engine().best_arm());
                assert_eq!(t, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn replay_matches_live_after_every_mutation() {
        let mut s = LiveSession::create("s".into(), spec(5, 60, 9), 0).unwrap();
        let mut coin = ChaCha8Rng::seed_from_u64(1);
        let mut now = 0;
        while !s.engine().is_complete() {
            now += 1;
            let (a, b) = pending(&mut s);
            assert_eq!(LiveSession::replay(s.events()).unwrap(), s);
            let outcome = match coin.random_range(0..3) {
                0 => Outcome::Tie,
                1 => Outcome::Winner(a),
                _ => Outcome::Winner(b.max(a)),
            };
            s.execute(Command::Report(outcome), now).unwrap();
            let replayed = LiveSession::replay(s.events()).unwrap();
            assert_eq!(replayed.state_view(), s.state_view());
            assert_eq!(replayed, s);
        }
    }

    #[test]
    fn replay_reports_the_gap() {
        let mut s = LiveSession::create("s".into(), spec(3, 10, 0), 0).unwrap();
        for _ in 0..3 {
            let (a, _) = pending(&mut s);
            s.execute(Command::Report(Outcome::Winner(a)), 1).unwrap();
        }
        let mut log = s.events().to_vec();
        log.remove(3);
        let err = LiveSession::replay(&log).unwrap_err();
        assert_eq!(
            err,
            ServiceError::replay(3, "sequence gap: found seq 4 where 3 was expected")
        );
    }

    #[test]
    fn replay_rejects_tampered_outcome() {
        let mut s = LiveSession::create("s".into(), spec(3, 10, 0), 0).unwrap();
        let (a, _) = pending(&mut s);
        s.execute(Command::Report(Outcome::Winner(a)), 1).unwrap();
        let mut log = s.events().to_vec();
        if let EventKind::Outcome { iteration, .. } = &mut log[2].kind {
            *iteration = 7;
        }
        assert!(matches!(
            LiveSession::replay(&log),
            Err(ServiceError::Replay { seq: 2, .. })
        ));
    }
}
