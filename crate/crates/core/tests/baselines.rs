use std::sync::Arc;

use corrduel::baselines::{PolicyKind, PolicySetup};
use corrduel::{ArmId, SimilarityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Share of the final 10% of steps in which the policy recommends arm 0,
/// when arm 0 beats arm 1 with probability 0.8.
fn late_preference(kind: PolicyKind, seed: u64) -> f64 {
    let horizon = 400u64;
    let setup = PolicySetup {
        num_arms: 2,
        similarity: Some(Arc::new(SimilarityMatrix::identity(2))),
        horizon,
        delta: None,
        rucb_alpha: corrduel::baselines::DEFAULT_ALPHA,
        seed,
    };
    let mut policy = setup.build(kind).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
    let mut hits = 0;
    let tail = horizon / 10;
    for t in 0..horizon {
        if let Some((a, b)) = policy.propose() {
            assert_ne!(a, b);
            let zero_wins = rng.random_bool(0.8);
            let winner = if zero_wins { ArmId(0) } else { ArmId(1) };
            policy.observe(a, b, winner).unwrap();
        }
        if t >= horizon - tail && policy.recommend() == ArmId(0) {
            hits += 1;
        }
    }
    hits as f64 / tail as f64
}

#[test]
fn every_policy_settles_on_the_better_of_two_arms() {
    for kind in PolicyKind::ALL {
        let mean = (0..50).map(|s| late_preference(kind, s)).sum::<f64>() / 50.0;
        assert!(mean > 0.9, "{kind}: {mean}");
    }
}

#[test]
fn policies_are_reproducible_from_their_seed() {
    for kind in PolicyKind::ALL {
        let trace = |seed| {
            let setup = PolicySetup {
                num_arms: 6,
                similarity: Some(Arc::new(
                    SimilarityMatrix::from_fn(6, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()))
                        .unwrap(),
                )),
                horizon: 120,
                delta: Some(0.1),
                rucb_alpha: 0.6,
                seed,
            };
            let mut p = setup.build(kind).unwrap();
            let mut out = Vec::new();
            while let Some((a, b)) = p.propose() {
                let w = a.min(b);
                p.observe(a, b, w).unwrap();
                out.push((a, b));
                if out.len() == 120 {
                    break;
                }
            }
            out
        };
        assert_eq!(trace(3), trace(3), "{kind}");
    }
}
