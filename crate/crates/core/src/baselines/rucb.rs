use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::policy::DuelingPolicy;
use crate::ArmId;

pub const DEFAULT_ALPHA: f64 = 0.51;

/// Relative Upper Confidence Bound.
///
/// Pairwise win counts are kept sparsely; a pair that has never been played
/// has an upper bound of 1 in both directions.
#[derive(Debug, Clone)]
pub struct Rucb {
    num_arms: usize,
    alpha: f64,
    /// `wins[&(i, j)]` counts how often `i` beat `j`.
    wins: HashMap<(usize, usize), u64>,
    opponents: Vec<Vec<usize>>,
    totals: Vec<(u64, u64)>,
    time: u64,
    rng: ChaCha8Rng,
}

impl Rucb {
    pub fn new(num_arms: usize, alpha: f64, seed: u64) -> Result<Self> {
        if num_arms < 2 {
            return Err(Error::Config(format!(
                "need at least 2 arms, got {num_arms}"
            )));
        }
        if !(alpha > 0.5) || !alpha.is_finite() {
            return Err(Error::Config(format!("alpha must exceed 0.5, got {alpha}")));
        }
        Ok(Self {
            num_arms,
            alpha,
            wins: HashMap::new(),
            opponents: vec![Vec::new(); num_arms],
            totals: vec![(0, 0); num_arms],
            time: 1,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn count(&self, i: usize, j: usize) -> u64 {
        self.wins.get(&(i, j)).copied().unwrap_or(0)
    }

    /// Upper confidence bound on the probability that `i` beats `j`.
    pub fn upper(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.5;
        }
        ucb_entry(self.count(i, j), self.count(j, i), self.time, self.alpha)
    }

    fn pick_champion(&mut self) -> usize {
        let mut beaten = vec![false; self.num_arms];
        for &(i, j) in self.wins.keys() {
            if self.upper(i, j) < 0.5 {
                beaten[i] = true;
            }
            if self.upper(j, i) < 0.5 {
                beaten[j] = true;
            }
        }
        let candidates: Vec<usize> = (0..self.num_arms).filter(|&i| !beaten[i]).collect();
        if candidates.is_empty() {
            self.rng.random_range(0..self.num_arms)
        } else {
            candidates[self.rng.random_range(0..candidates.len())]
        }
    }

    fn pick_challenger(&mut self, champion: usize) -> usize {
        let played = &self.opponents[champion];
        let unplayed = self.num_arms - 1 - played.len();
        let mut best = f64::NEG_INFINITY;
        let mut ties: Vec<usize> = Vec::new();
        for &j in played {
            let u = self.upper(j, champion);
            if u > best {
                best = u;
                ties.clear();
            }
            if u == best {
                ties.push(j);
            }
        }
        let unplayed_ties = if unplayed > 0 && 1.0 >= best {
            if 1.0 > best {
                ties.clear();
            }
            unplayed
        } else {
            0
        };
        let pick = self.rng.random_range(0..ties.len() + unplayed_ties);
        if pick < ties.len() {
            return ties[pick];
        }
        // the (pick - ties.len())-th arm with no record against the champion
        let mut skip = pick - ties.len();
        let mut seen = vec![false; self.num_arms];
        seen[champion] = true;
        for &j in played {
            seen[j] = true;
        }
        for (j, &s) in seen.iter().enumerate() {
            if !s {
                if skip == 0 {
                    return j;
                }
                skip -= 1;
            }
        }
        unreachable!("unplayed count is consistent with the opponent lists")
    }
}

pub(crate) fn ucb_entry(wins: u64, losses: u64, time: u64, alpha: f64) -> f64 {
    let n = (wins + losses) as f64;
    if n == 0.0 {
        return 1.0;
    }
    wins as f64 / n + (alpha * (time as f64).ln() / n).sqrt()
}

impl DuelingPolicy for Rucb {
    fn name(&self) -> &str {
        "rucb"
    }

    fn propose(&mut self) -> Option<(ArmId, ArmId)> {
        let c = self.pick_champion();
        let d = self.pick_challenger(c);
        Some((ArmId(c), ArmId(d)))
    }

    fn observe(&mut self, first: ArmId, second: ArmId, winner: ArmId) -> Result<()> {
        let (i, j) = (first.0, second.0);
        if i == j || i >= self.num_arms || j >= self.num_arms {
            return Err(Error::Domain(format!("invalid duel ({first}, {second})")));
        }
        let loser = if winner == first {
            j
        } else if winner == second {
            i
        } else {
            return Err(Error::Domain(format!("winner {winner} did not play")));
        };
        let w = winner.0;
        if self.count(i, j) + self.count(j, i) == 0 {
            self.opponents[i].push(j);
            self.opponents[j].push(i);
        }
        *self.wins.entry((w, loser)).or_insert(0) += 1;
        self.totals[w].0 += 1;
        self.totals[w].1 += 1;
        self.totals[loser].1 += 1;
        self.time += 1;
        Ok(())
    }

    /// Arm with the best overall empirical win rate, lowest id on ties.
    fn recommend(&self) -> ArmId {
        let rate = |(w, n): (u64, u64)| if n == 0 { 0.5 } else { w as f64 / n as f64 };
        let mut best = 0;
        for i in 1..self.num_arms {
            if rate(self.totals[i]) > rate(self.totals[best]) {
                best = i;
            }
        }
        ArmId(best)
    }
}
