use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::confidence::confidence_radius;
use crate::engine::{default_delta, sample_pair};
use crate::error::{Error, Result};
use crate::policy::DuelingPolicy;
use crate::ArmId;

#[derive(Debug, Clone, Copy)]
struct Duel {
    winner: ArmId,
    loser: ArmId,
    removed: bool,
}

/// Beat-the-Mean style elimination over independent arms, with integer
/// win/play counts and no notion of similarity.
#[derive(Debug, Clone)]
pub struct BeatTheMean {
    active: Vec<ArmId>,
    wins: Vec<u64>,
    plays: Vec<u64>,
    log: Vec<Duel>,
    delta: f64,
    horizon: u64,
    iteration: u64,
    rng: ChaCha8Rng,
    pending: Option<(ArmId, ArmId)>,
}

/// Trajectory event exposed for comparison against the correlational engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BtmStep {
    pub pair: (ArmId, ArmId),
    pub winner: ArmId,
    pub eliminated: Option<ArmId>,
}

impl BeatTheMean {
    pub fn new(num_arms: usize, horizon: u64, delta: Option<f64>, seed: u64) -> Result<Self> {
        if num_arms < 2 {
            return Err(Error::Config(format!(
                "need at least 2 arms, got {num_arms}"
            )));
        }
        let delta = delta.unwrap_or_else(|| default_delta(num_arms, horizon));
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self {
            active: (0..num_arms).map(ArmId).collect(),
            wins: vec![0; num_arms],
            plays: vec![0; num_arms],
            log: Vec::new(),
            delta,
            horizon,
            iteration: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
        })
    }

    pub fn is_complete(&self) -> bool {
        self.iteration >= self.horizon || self.active.len() < 2
    }

    pub fn active(&self) -> &[ArmId] {
        &self.active
    }

    pub fn counts(&self, arm: ArmId) -> (u64, u64) {
        (self.wins[arm.0], self.plays[arm.0])
    }

    fn rate(&self, arm: ArmId) -> f64 {
        match self.plays[arm.0] {
            0 => 0.5,
            n => self.wins[arm.0] as f64 / n as f64,
        }
    }

    fn next_pair(&mut self) -> Option<(ArmId, ArmId)> {
        if self.is_complete() {
            return None;
        }
        if self.pending.is_none() {
            self.pending = Some(sample_pair(&self.active, &mut self.rng));
        }
        self.pending
    }

    /// Plays one duel against `judge` and returns what happened.
    pub fn step(&mut self, judge: &mut impl FnMut(ArmId, ArmId) -> ArmId) -> Option<BtmStep> {
        let pair = self.next_pair()?;
        let winner = judge(pair.0, pair.1);
        let eliminated = self.settle(pair, winner).ok()?;
        Some(BtmStep {
            pair,
            winner,
            eliminated,
        })
    }

    fn settle(&mut self, pair: (ArmId, ArmId), winner: ArmId) -> Result<Option<ArmId>> {
        let loser = if winner == pair.0 { pair.1 } else { pair.0 };
        self.wins[winner.0] += 1;
        self.plays[winner.0] += 1;
        self.plays[loser.0] += 1;
        self.log.push(Duel {
            winner,
            loser,
            removed: false,
        });
        self.iteration += 1;
        self.pending = None;
        Ok(self.eliminate())
    }

    fn eliminate(&mut self) -> Option<ArmId> {
        if self.active.len() < 2 {
            return None;
        }
        let fewest = self
            .active
            .iter()
            .map(|a| self.plays[a.0])
            .min()
            .unwrap_or(0);
        let radius = confidence_radius(fewest as f64, self.delta).unwrap_or(1.0);
        let mut weakest = self.active[0];
        let mut strongest = self.active[0];
        for &a in &self.active[1..] {
            if self.rate(a) < self.rate(weakest) {
                weakest = a;
            }
            if self.rate(a) > self.rate(strongest) {
                strongest = a;
            }
        }
        if self.rate(weakest) + radius > self.rate(strongest) - radius {
            return None;
        }
        self.active.retain(|&a| a != weakest);
        for duel in self.log.iter_mut().filter(|d| !d.removed) {
            if duel.winner == weakest {
                duel.removed = true;
                if self.active.contains(&duel.loser) {
                    self.plays[duel.loser.0] -= 1;
                }
            } else if duel.loser == weakest {
                duel.removed = true;
                if self.active.contains(&duel.winner) {
                    self.wins[duel.winner.0] -= 1;
                    self.plays[duel.winner.0] -= 1;
                }
            }
        }
        Some(weakest)
    }

    pub fn best_arm(&self) -> ArmId {
        let mut best = self.active[0];
        for &a in &self.active[1..] {
            if self.rate(a) > self.rate(best) {
                best = a;
            }
        }
        best
    }
}

impl DuelingPolicy for BeatTheMean {
    fn name(&self) -> &str {
        "btm"
    }

    fn propose(&mut self) -> Option<(ArmId, ArmId)> {
        self.next_pair()
    }

    fn observe(&mut self, first: ArmId, second: ArmId, winner: ArmId) -> Result<()> {
        if winner != first && winner != second {
            return Err(Error::Domain(format!("winner {winner} did not play")));
        }
        for a in [first, second] {
            if !self.active.contains(&a) {
                return Err(Error::StaleArm(a));
            }
        }
        self.settle((first, second), winner).map(|_| ())
    }

    fn recommend(&self) -> ArmId {
        self.best_arm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_arm_noiseless_run_keeps_winner() {
        let mut btm = BeatTheMean::new(2, 1_000, None, 3).unwrap();
        let mut judge = |a: ArmId, b: ArmId| if a.0 == 1 { a } else { b };
        let mut eliminated = None;
        while let Some(step) = btm.step(&mut judge) {
            eliminated = eliminated.or(step.eliminated);
        }
        assert_eq!(eliminated, Some(ArmId(0)));
        assert_eq!(btm.best_arm(), ArmId(1));
        assert!(btm.is_complete());
    }

    #[test]
    fn no_elimination_before_every_arm_plays() {
        let mut btm = BeatTheMean::new(4, 100, Some(0.9), 0).unwrap();
        btm.wins[0] = 5;
        btm.plays[0] = 5;
        btm.plays[1] = 5;
        btm.plays[2] = 5;
        assert_eq!(btm.eliminate(), None);
    }
}
