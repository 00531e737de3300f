use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::policy::DuelingPolicy;
use crate::ArmId;

/// UCB1 index: `mean + sqrt(2 ln t / n)`.
pub fn ucb1_index(mean: f64, plays: u64, time: u64) -> f64 {
    mean + (2.0 * (time as f64).ln() / plays as f64).sqrt()
}

#[derive(Debug, Clone)]
struct Ucb1 {
    rewards: Vec<u64>,
    plays: Vec<u64>,
    time: u64,
    rng: ChaCha8Rng,
}

impl Ucb1 {
    fn new(num_arms: usize, rng: ChaCha8Rng) -> Self {
        Self {
            rewards: vec![0; num_arms],
            plays: vec![0; num_arms],
            time: 0,
            rng,
        }
    }

    /// Untried arms first in index order, then the highest index with
    /// random tie-breaking. `exclude` is never chosen.
    fn choose(&mut self, exclude: Option<usize>) -> usize {
        let allowed = |i: &usize| Some(*i) != exclude;
        if let Some(i) = (0..self.plays.len())
            .filter(allowed)
            .find(|&i| self.plays[i] == 0)
        {
            return i;
        }
        let mut best = f64::NEG_INFINITY;
        let mut ties = Vec::new();
        for i in (0..self.plays.len()).filter(allowed) {
            let mean = self.rewards[i] as f64 / self.plays[i] as f64;
            let u = ucb1_index(mean, self.plays[i], self.time);
            if u > best {
                best = u;
                ties.clear();
            }
            if u == best {
                ties.push(i);
            }
        }
        ties[self.rng.random_range(0..ties.len())]
    }

    fn update(&mut self, arm: usize, reward: bool) {
        self.plays[arm] += 1;
        self.rewards[arm] += u64::from(reward);
        self.time += 1;
    }

    fn most_played(&self) -> usize {
        let mut best = 0;
        for i in 1..self.plays.len() {
            if self.plays[i] > self.plays[best] {
                best = i;
            }
        }
        best
    }
}

/// Sparring with two UCB1 learners, one per duel slot. The winner's
/// learner is rewarded 1, the loser's 0.
#[derive(Debug, Clone)]
pub struct SparringUcb1 {
    left: Ucb1,
    right: Ucb1,
}

impl SparringUcb1 {
    pub fn new(num_arms: usize, seed: u64) -> Result<Self> {
        if num_arms < 2 {
            return Err(Error::Config(format!(
                "need at least 2 arms, got {num_arms}"
            )));
        }
        let stream = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            rng
        };
        Ok(Self {
            left: Ucb1::new(num_arms, stream(0)),
            right: Ucb1::new(num_arms, stream(1)),
        })
    }
}

impl DuelingPolicy for SparringUcb1 {
    fn name(&self) -> &str {
        "sparring-ucb1"
    }

    fn propose(&mut self) -> Option<(ArmId, ArmId)> {
        let a = self.left.choose(None);
        let b = self.right.choose(Some(a));
        Some((ArmId(a), ArmId(b)))
    }

    fn observe(&mut self, first: ArmId, second: ArmId, winner: ArmId) -> Result<()> {
        let k = self.left.plays.len();
        if first == second || first.0 >= k || second.0 >= k {
            return Err(Error::Domain(format!("invalid duel ({first}, {second})")));
        }
        if winner != first && winner != second {
            return Err(Error::Domain(format!("winner {winner} did not play")));
        }
        self.left.update(first.0, winner == first);
        self.right.update(second.0, winner == second);
        Ok(())
    }

    fn recommend(&self) -> ArmId {
        ArmId(self.left.most_played())
    }
}
