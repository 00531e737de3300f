use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::simlab::UtilityField;
use crate::ArmId;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Duels between arms whose observed value is the hidden utility plus
/// independent Gaussian noise.
#[derive(Debug, Clone)]
pub struct DuelEnvironment {
    utility: UtilityField,
    sigma: f64,
    best: ArmId,
}

impl DuelEnvironment {
    pub fn new(utility: UtilityField, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!(
                "noise scale must be positive, got {sigma}"
            )));
        }
        if utility.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("utility values must be finite".into()));
        }
        let best = utility.best_arm();
        Ok(Self {
            utility,
            sigma,
            best,
        })
    }

    pub fn utility(&self) -> &UtilityField {
        &self.utility
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn num_arms(&self) -> usize {
        self.utility.len()
    }

    pub fn best_arm(&self) -> ArmId {
        self.best
    }

    /// `P(i beats j) = Φ((f_i - f_j) / (σ √2))`.
    pub fn true_win_probability(&self, i: ArmId, j: ArmId) -> f64 {
        let gap = self.utility.values[i.0] - self.utility.values[j.0];
        normal_cdf(gap / (self.sigma * SQRT_2))
    }

    /// Comparison factor `P(i beats j) - 1/2`.
    pub fn comparison_factor(&self, i: ArmId, j: ArmId) -> f64 {
        self.true_win_probability(i, j) - 0.5
    }

    /// Regret of playing `(a, b)`: the sum of both arms' comparison factors
    /// against the best arm.
    pub fn stepwise_regret(&self, a: ArmId, b: ArmId) -> f64 {
        self.comparison_factor(self.best, a) + self.comparison_factor(self.best, b)
    }

    pub fn duel_sample<R: Rng + ?Sized>(&self, i: ArmId, j: ArmId, rng: &mut R) -> ArmId {
        let noise_i: f64 = StandardNormal.sample(rng);
        let noise_j: f64 = StandardNormal.sample(rng);
        let xi = self.utility.values[i.0] + self.sigma * noise_i;
        let xj = self.utility.values[j.0] + self.sigma * noise_j;
        if xi > xj {
            i
        } else if xj > xi {
            j
        } else if rng.random_bool(0.5) {
            i
        } else {
            j
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(values: Vec<f64>, sigma: f64) -> DuelEnvironment {
        DuelEnvironment::new(
            UtilityField {
                values,
                lengthscale: 0.2,
                seed: 0,
            },
            sigma,
        )
        .unwrap()
    }

    #[test]
    fn equal_utilities_are_a_coin_flip() {
        let e = env(vec![0.3, 0.3], 0.5);
        assert_eq!(e.true_win_probability(ArmId(0), ArmId(1)), 0.5);
        assert_eq!(e.comparison_factor(ArmId(0), ArmId(1)), 0.0);
    }

    #[test]
    fn one_sigma_root_two_gap() {
        let s = 0.5;
        let e = env(vec![s * SQRT_2, 0.0], s);
        // mpmath ncdf(1)
        assert_abs_diff_eq!(
            e.true_win_probability(ArmId(0), ArmId(1)),
            0.841_344_746_068_543,
            epsilon = 1e-14
        );
    }

    #[test]
    fn complementary_probabilities() {
        let e = env(vec![0.1, -1.3, 2.2, 0.7], 0.5);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let p = e.true_win_probability(ArmId(i), ArmId(j))
                        + e.true_win_probability(ArmId(j), ArmId(i));
                    assert_abs_diff_eq!(p, 1.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn large_gap_almost_always_wins() {
        let e = env(vec![5.0, 0.0], 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let wins = (0..100_000)
            .filter(|_| e.duel_sample(ArmId(0), ArmId(1), &mut rng) == ArmId(0))
            .count();
        assert!(wins as f64 / 1e5 >= 0.9999);
    }

    #[test]
    fn sample_matches_closed_form() {
        let e = env(vec![0.0, 0.35], 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let wins = (0..100_000)
            .filter(|_| e.duel_sample(ArmId(1), ArmId(0), &mut rng) == ArmId(1))
            .count();
        let p = e.true_win_probability(ArmId(1), ArmId(0));
        assert!((wins as f64 / 1e5 - p).abs() < 0.01);
    }

    #[test]
    fn deterministic_given_rng() {
        let e = env(vec![0.0, 0.1, 0.2], 0.5);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| e.duel_sample(ArmId(0), ArmId(2), &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn transitivity_of_comparison_factors() {
        let e = env(vec![1.2, 0.4, -0.3, -2.0], 0.5);
        for (i, j, k) in [(0, 1, 2), (0, 1, 3), (1, 2, 3), (0, 2, 3)] {
            let (i, j, k) = (ArmId(i), ArmId(j), ArmId(k));
            let ik = e.comparison_factor(i, k);
            assert!(ik >= e.comparison_factor(i, j).max(e.comparison_factor(j, k)));
        }
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(DuelEnvironment::new(
            UtilityField {
                values: vec![0.0, 1.0],
                lengthscale: 0.2,
                seed: 0
            },
            0.0
        )
        .is_err());
    }
}
