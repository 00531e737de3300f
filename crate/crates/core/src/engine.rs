//! The correlational elimination engine.
//!
//! A [`SessionState`] holds the active set, per-arm fractional win/play
//! totals and the duel log those totals were built from. Every duel updates
//! all active arms through [`corr_update_weights`]; an arm whose upper
//! confidence bound falls below the leader's lower bound is eliminated,
//! together with every duel it took part in.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::confidence::confidence_radius;
use crate::error::{Error, Result};
use crate::policy::DuelingPolicy;
use crate::update::{corr_update_weights, UpdateWeights};
use crate::{ArmId, SimilarityMatrix};

/// Totals below this are treated as zero after subtracting removed duels.
const RESIDUAL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub num_arms: usize,
    pub horizon: u64,
    pub delta: f64,
    pub rng_seed: u64,
}

impl SessionConfig {
    /// Config with the default confidence `1 / (2 · horizon · num_arms)`.
    pub fn new(num_arms: usize, horizon: u64, rng_seed: u64) -> Self {
        Self {
            num_arms,
            horizon,
            delta: default_delta(num_arms, horizon),
            rng_seed,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_arms < 2 {
            return Err(Error::Config(format!(
                "need at least 2 arms, got {}",
                self.num_arms
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

pub fn default_delta(num_arms: usize, horizon: u64) -> f64 {
    let d = 1.0 / (2.0 * horizon.max(1) as f64 * num_arms.max(1) as f64);
    d.min(0.5)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub wins: f64,
    pub plays: f64,
}

impl ArmStats {
    /// Empirical win rate, 1/2 before any play.
    pub fn win_rate(&self) -> f64 {
        if self.plays == 0.0 {
            0.5
        } else {
            self.wins / self.plays
        }
    }

    fn add(&mut self, u: UpdateWeights) {
        self.wins += u.kappa;
        self.plays += u.tau;
    }

    fn subtract(&mut self, c: &Contribution) {
        self.wins -= c.wins;
        self.plays -= c.plays;
        if self.plays < RESIDUAL_EPS {
            self.plays = 0.0;
            self.wins = 0.0;
        } else {
            self.wins = self.wins.clamp(0.0, self.plays);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub arm: ArmId,
    pub wins: f64,
    pub plays: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelRecord {
    pub iteration: u64,
    pub first: ArmId,
    pub second: ArmId,
    pub winner: ArmId,
    pub contributions: Vec<Contribution>,
    pub removed: bool,
}

impl DuelRecord {
    pub fn involves(&self, arm: ArmId) -> bool {
        self.first == arm || self.second == arm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elimination {
    pub arm: ArmId,
    pub round: u64,
    pub iteration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub config: SessionConfig,
    /// Active arms in ascending id order.
    pub active: Vec<ArmId>,
    pub round: u64,
    pub iteration: u64,
    /// Indexed by arm id. Entries of eliminated arms are frozen.
    pub stats: Vec<ArmStats>,
    pub duel_log: Vec<DuelRecord>,
    pub eliminated: Vec<Elimination>,
}

impl SessionState {
    pub fn new(config: SessionConfig, similarity: &SimilarityMatrix) -> Result<Self> {
        config.validate()?;
        if similarity.dim() != config.num_arms {
            return Err(Error::Config(format!(
                "similarity matrix is {0}x{0} but the session has {1} arms",
                similarity.dim(),
                config.num_arms
            )));
        }
        Ok(Self {
            config,
            active: (0..config.num_arms).map(ArmId).collect(),
            round: 1,
            iteration: 0,
            stats: vec![ArmStats::default(); config.num_arms],
            duel_log: Vec::new(),
            eliminated: Vec::new(),
        })
    }

    pub fn is_active(&self, arm: ArmId) -> bool {
        self.active.binary_search(&arm).is_ok()
    }

    /// True once the horizon is reached or a single arm remains.
    pub fn is_complete(&self) -> bool {
        self.iteration >= self.config.horizon || self.active.len() < 2
    }

    pub fn win_rate(&self, arm: ArmId) -> f64 {
        self.stats[arm.index()].win_rate()
    }

    /// Fewest plays among active arms.
    pub fn min_plays(&self) -> f64 {
        self.active
            .iter()
            .map(|a| self.stats[a.index()].plays)
            .fold(f64::INFINITY, f64::min)
    }

    /// Current shared confidence radius, 1 before every active arm has played.
    pub fn confidence(&self) -> f64 {
        let n = self.min_plays();
        if n.is_finite() {
            confidence_radius(n, self.config.delta).unwrap_or(1.0)
        } else {
            1.0
        }
    }

    /// Two distinct active arms, uniformly over unordered pairs and in random order.
    pub fn select_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(ArmId, ArmId)> {
        if self.active.len() < 2 {
            return Err(Error::SessionComplete);
        }
        Ok(sample_pair(&self.active, rng))
    }

    /// Credits `winner` over `loser` and spreads correlated updates to every
    /// other active arm.
    pub fn apply_duel_outcome(
        &mut self,
        similarity: &SimilarityMatrix,
        winner: ArmId,
        loser: ArmId,
    ) -> Result<DuelRecord> {
        for arm in [winner, loser] {
            if arm.index() >= self.config.num_arms || !self.is_active(arm) {
                return Err(Error::StaleArm(arm));
            }
        }
        if winner == loser {
            return Err(Error::Domain(format!("arm {winner} cannot duel itself")));
        }
        let mut contributions = Vec::new();
        for &k in &self.active {
            let u = corr_update_weights(k, winner, loser, similarity)?;
            if !u.is_none() {
                contributions.push(Contribution {
                    arm: k,
                    wins: u.kappa,
                    plays: u.tau,
                });
            }
        }
        for c in &contributions {
            self.stats[c.arm.index()].add(UpdateWeights {
                kappa: c.wins,
                tau: c.plays,
            });
        }
        let record = DuelRecord {
            iteration: self.iteration,
            first: winner,
            second: loser,
            winner,
            contributions,
            removed: false,
        };
        self.duel_log.push(record.clone());
        self.iteration += 1;
        Ok(record)
    }

    /// Eliminates the weakest active arm if its confidence interval lies
    /// entirely below the strongest arm's, and discards every duel it fought.
    pub fn try_eliminate(&mut self) -> Option<ArmId> {
        if self.active.len() < 2 {
            return None;
        }
        let radius = self.confidence();
        let (weakest, low) = self.extreme_win_rate(|cand, best| cand < best);
        let (_, high) = self.extreme_win_rate(|cand, best| cand > best);
        if low + radius > high - radius {
            return None;
        }

        for record in self
            .duel_log
            .iter_mut()
            .filter(|r| !r.removed && r.involves(weakest))
        {
            record.removed = true;
            for c in &record.contributions {
                if c.arm != weakest && self.active.binary_search(&c.arm).is_ok() {
                    self.stats[c.arm.index()].subtract(c);
                }
            }
        }
        if let Ok(pos) = self.active.binary_search(&weakest) {
            self.active.remove(pos);
        }
        self.eliminated.push(Elimination {
            arm: weakest,
            round: self.round,
            iteration: self.iteration,
        });
        self.round += 1;
        Some(weakest)
    }

    /// Active arm with the highest empirical win rate, lowest id on ties.
    pub fn best_arm(&self) -> ArmId {
        self.extreme_win_rate(|cand, best| cand > best).0
    }

    fn extreme_win_rate(&self, better: impl Fn(f64, f64) -> bool) -> (ArmId, f64) {
        let mut iter = self.active.iter();
        let first = *iter.next().expect("active set is never empty");
        let mut best = (first, self.win_rate(first));
        for &arm in iter {
            let p = self.win_rate(arm);
            if better(p, best.1) {
                best = (arm, p);
            }
        }
        best
    }

    /// Recomputes active-arm totals from the non-removed duel records.
    pub fn recompute_from_log(&self) -> Vec<ArmStats> {
        let mut out = vec![ArmStats::default(); self.config.num_arms];
        for record in self.duel_log.iter().filter(|r| !r.removed) {
            for c in &record.contributions {
                out[c.arm.index()].wins += c.wins;
                out[c.arm.index()].plays += c.plays;
            }
        }
        out
    }
}

/// Uniform unordered pair from `arms`, returned in uniformly random order.
pub fn sample_pair<R: Rng + ?Sized>(arms: &[ArmId], rng: &mut R) -> (ArmId, ArmId) {
    let m = arms.len();
    debug_assert!(m >= 2);
    let a = rng.random_range(0..m);
    let mut b = rng.random_range(0..m - 1);
    if b >= a {
        b += 1;
    }
    (arms[a], arms[b])
}

/// Supplies the winner of a proposed duel.
pub trait OutcomeSource {
    fn duel(&mut self, first: ArmId, second: ArmId) -> ArmId;
}

impl<F: FnMut(ArmId, ArmId) -> ArmId> OutcomeSource for F {
    fn duel(&mut self, first: ArmId, second: ArmId) -> ArmId {
        self(first, second)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub iteration: u64,
    pub pair: (ArmId, ArmId),
    pub winner: ArmId,
    pub eliminated: Option<ArmId>,
}

/// A session plus the similarity it runs on and its own random stream.
#[derive(Debug, Clone)]
pub struct CorrDuel {
    state: SessionState,
    similarity: Arc<SimilarityMatrix>,
    rng: ChaCha8Rng,
    pending: Option<(ArmId, ArmId)>,
}

impl CorrDuel {
    pub fn new(config: SessionConfig, similarity: Arc<SimilarityMatrix>) -> Result<Self> {
        let state = SessionState::new(config, &similarity)?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            state,
            similarity,
            pending: None,
        })
    }

    pub(crate) fn from_parts(
        state: SessionState,
        similarity: Arc<SimilarityMatrix>,
        rng: ChaCha8Rng,
        pending: Option<(ArmId, ArmId)>,
    ) -> Self {
        Self {
            state,
            similarity,
            rng,
            pending,
        }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn similarity(&self) -> &Arc<SimilarityMatrix> {
        &self.similarity
    }

    pub(crate) fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn pending(&self) -> Option<(ArmId, ArmId)> {
        self.pending
    }

    pub fn is_complete(&self) -> bool {
        self.state.is_complete()
    }

    pub fn best_arm(&self) -> ArmId {
        self.state.best_arm()
    }

    /// Next pair to duel. Repeated calls return the same pair until an
    /// outcome is recorded.
    pub fn propose(&mut self) -> Result<(ArmId, ArmId)> {
        if self.state.is_complete() {
            return Err(Error::SessionComplete);
        }
        if let Some(pair) = self.pending {
            return Ok(pair);
        }
        let pair = self.state.select_pair(&mut self.rng)?;
        self.pending = Some(pair);
        Ok(pair)
    }

    /// Records the outcome of the pending duel, then attempts an elimination.
    pub fn record(&mut self, winner: ArmId) -> Result<StepReport> {
        let pair = self
            .pending
            .ok_or_else(|| Error::Domain("no duel is pending".into()))?;
        let loser = if winner == pair.0 {
            pair.1
        } else if winner == pair.1 {
            pair.0
        } else {
            return Err(Error::Domain(format!(
                "winner {winner} is not part of the pending duel ({}, {})",
                pair.0, pair.1
            )));
        };
        let iteration = self.state.iteration;
        self.state
            .apply_duel_outcome(&self.similarity, winner, loser)?;
        self.pending = None;
        let eliminated = self.state.try_eliminate();
        Ok(StepReport {
            iteration,
            pair,
            winner,
            eliminated,
        })
    }

    pub fn step(&mut self, source: &mut impl OutcomeSource) -> Result<StepReport> {
        let (a, b) = self.propose()?;
        let winner = source.duel(a, b);
        self.record(winner)
    }

    /// Steps until the horizon is reached or one arm remains; returns the best arm.
    pub fn run(&mut self, source: &mut impl OutcomeSource) -> Result<ArmId> {
        while !self.is_complete() {
            self.step(source)?;
        }
        Ok(self.best_arm())
    }
}

impl DuelingPolicy for CorrDuel {
    fn name(&self) -> &str {
        "corrduel"
    }

    fn propose(&mut self) -> Option<(ArmId, ArmId)> {
        CorrDuel::propose(self).ok()
    }

    fn observe(&mut self, first: ArmId, second: ArmId, winner: ArmId) -> Result<()> {
        match self.pending {
            Some(p) if p == (first, second) || p == (second, first) => {}
            Some(p) => {
                return Err(Error::Domain(format!(
                    "observed duel ({first}, {second}) but ({}, {}) is pending",
                    p.0, p.1
                )))
            }
            None => self.pending = Some((first, second)),
        }
        self.record(winner).map(|_| ())
    }

    fn recommend(&self) -> ArmId {
        self.best_arm()
    }
}
