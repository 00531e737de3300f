use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{PolicyKind, PolicySetup, DEFAULT_ALPHA};
use crate::engine::default_delta;
use crate::error::{Error, Result};
use crate::policy::DuelingPolicy;
use crate::similarity::{se_similarity, EmbeddedArmSet, GridShape, DEFAULT_LENGTHSCALE};
use crate::simlab::{DuelEnvironment, GpSampler};

/// Benchmark description; also the on-disk experiment file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub policies: Vec<PolicyKind>,
    pub grid: GridShape,
    pub lengthscale: f64,
    pub sigma: f64,
    pub horizon: u64,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub rucb_alpha: f64,
    /// Reuse the first trial's landscape for every trial.
    pub fixed_landscape: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            policies: PolicyKind::ALL.to_vec(),
            grid: GridShape { nx: 50, ny: 50 },
            lengthscale: DEFAULT_LENGTHSCALE,
            sigma: 0.5,
            horizon: 100,
            trials: 200,
            seed: 0,
            delta: None,
            rucb_alpha: DEFAULT_ALPHA,
            fixed_landscape: false,
        }
    }
}

impl ExperimentSpec {
    pub fn num_arms(&self) -> usize {
        self.grid.nx * self.grid.ny
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        if self.num_arms() < 2 {
            return bad(format!("grid {} has fewer than 2 arms", self.grid));
        }
        if !(self.lengthscale > 0.0) {
            return bad(format!(
                "lengthscale must be positive, got {}",
                self.lengthscale
            ));
        }
        if !(self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad(format!("delta must lie in (0, 1), got {d}"));
            }
        }
        if !(self.rucb_alpha > 0.5) {
            return bad(format!(
                "rucb_alpha must exceed 0.5, got {}",
                self.rucb_alpha
            ));
        }
        Ok(())
    }

    /// Copy with every derived default filled in.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.delta = Some(
            self.delta
                .unwrap_or_else(|| default_delta(self.num_arms(), self.horizon)),
        );
        out
    }
}

/// Per-iteration regret of one policy on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub policy: PolicyKind,
    pub trial: usize,
    pub seed: u64,
    pub num_arms: usize,
    pub horizon: u64,
    pub stepwise: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn new(
        policy: PolicyKind,
        trial: usize,
        seed: u64,
        num_arms: usize,
        stepwise: Vec<f64>,
    ) -> Self {
        let cumulative = stepwise
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect();
        Self {
            policy,
            trial,
            seed,
            num_arms,
            horizon: stepwise.len() as u64,
            stepwise,
            cumulative,
        }
    }
}

/// splitmix64 over `(master, a, b)`.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut x = master;
    for v in [a, b] {
        x = x
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(v.wrapping_mul(0xD1B5_4A32_D192_ED03));
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}

const LANDSCAPE: u64 = 0;
const NOISE: u64 = 1;
const POLICY: u64 = 2;

/// Plays `policy` for `horizon` steps against `env`. Once the policy stops
/// proposing duels it is charged for playing its recommendation twice.
pub fn run_trial(
    policy: &mut dyn DuelingPolicy,
    env: &DuelEnvironment,
    horizon: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut regret = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        match policy.propose() {
            Some((a, b)) => {
                regret.push(env.stepwise_regret(a, b));
                let winner = env.duel_sample(a, b, rng);
                policy.observe(a, b, winner)?;
            }
            None => {
                let best = policy.recommend();
                regret.push(env.stepwise_regret(best, best));
            }
        }
    }
    Ok(regret)
}

/// Runs every policy on `trials` fresh GP landscapes. Traces come back
/// ordered by trial, then by the spec's policy order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RegretTrace>> {
    spec.validate()?;
    let arms = EmbeddedArmSet::grid(spec.grid.nx, spec.grid.ny, spec.lengthscale)?;
    let sampler = GpSampler::new(&arms)?;
    let similarity = if spec.policies.contains(&PolicyKind::CorrDuel) {
        Some(Arc::new(se_similarity(&arms)?))
    } else {
        None
    };
    let k = arms.len();

    let per_trial: Vec<Result<Vec<RegretTrace>>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let landscape_trial = if spec.fixed_landscape {
                0
            } else {
                trial as u64
            };
            let utility = sampler.sample(derive_seed(spec.seed, landscape_trial, LANDSCAPE));
            let env = DuelEnvironment::new(utility, spec.sigma)?;
            spec.policies
                .iter()
                .enumerate()
                .map(|(p, &kind)| {
                    let policy_seed = derive_seed(spec.seed, trial as u64, POLICY + 8 * p as u64);
                    let setup = PolicySetup {
                        num_arms: k,
                        similarity: similarity.clone(),
                        horizon: spec.horizon,
                        delta: spec.delta,
                        rucb_alpha: spec.rucb_alpha,
                        seed: policy_seed,
                    };
                    let mut policy = setup.build(kind)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        spec.seed,
                        trial as u64,
                        NOISE + 8 * p as u64,
                    ));
                    let stepwise = run_trial(policy.as_mut(), &env, spec.horizon, &mut rng)?;
                    Ok(RegretTrace::new(kind, trial, policy_seed, k, stepwise))
                })
                .collect()
        })
        .collect();

    let mut traces = Vec::with_capacity(spec.trials * spec.policies.len());
    for t in per_trial {
        traces.extend(t?);
    }
    Ok(traces)
}

/// Mean and spread of one policy's regret across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub policy: PolicyKind,
    pub trials: usize,
    pub mean_stepwise: Vec<f64>,
    /// Sample standard deviation; zero for a single trial.
    pub std_stepwise: Vec<f64>,
    pub mean_cumulative: Vec<f64>,
}

/// Groups traces by policy, in order of first appearance, and averages
/// them per iteration.
pub fn aggregate(traces: &[RegretTrace]) -> Result<Vec<RegretCurve>> {
    let mut order: Vec<PolicyKind> = Vec::new();
    for t in traces {
        if !order.contains(&t.policy) {
            order.push(t.policy);
        }
    }
    order
        .into_iter()
        .map(|policy| {
            let group: Vec<&RegretTrace> = traces.iter().filter(|t| t.policy == policy).collect();
            let len = group[0].stepwise.len();
            if group.iter().any(|t| t.stepwise.len() != len) {
                return Err(Error::Config(format!(
                    "traces for {policy} have different horizons"
                )));
            }
            let n = group.len() as f64;
            let mut mean_stepwise = vec![0.0; len];
            let mut std_stepwise = vec![0.0; len];
            let mut mean_cumulative = vec![0.0; len];
            for i in 0..len {
                let mean = group.iter().map(|t| t.stepwise[i]).sum::<f64>() / n;
                mean_stepwise[i] = mean;
                mean_cumulative[i] = group.iter().map(|t| t.cumulative[i]).sum::<f64>() / n;
                if group.len() > 1 {
                    let ss: f64 = group.iter().map(|t| (t.stepwise[i] - mean).powi(2)).sum();
                    std_stepwise[i] = (ss / (n - 1.0)).sqrt();
                }
            }
            Ok(RegretCurve {
                policy,
                trials: group.len(),
                mean_stepwise,
                std_stepwise,
                mean_cumulative,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::UtilityField;
    use crate::ArmId;
    use rand::Rng;

    fn env(values: Vec<f64>) -> DuelEnvironment {
        DuelEnvironment::new(
            UtilityField {
                values,
                lengthscale: 0.2,
                seed: 0,
            },
            0.5,
        )
        .unwrap()
    }

    struct Fixed {
        pair: Option<(ArmId, ArmId)>,
        best: ArmId,
    }

    impl DuelingPolicy for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn propose(&mut self) -> Option<(ArmId, ArmId)> {
            self.pair
        }
        fn observe(&mut self, _: ArmId, _: ArmId, _: ArmId) -> Result<()> {
            Ok(())
        }
        fn recommend(&self) -> ArmId {
            self.best
        }
    }

    struct Uniform {
        k: usize,
        rng: ChaCha8Rng,
    }

    impl DuelingPolicy for Uniform {
        fn name(&self) -> &str {
            "uniform"
        }
        fn propose(&mut self) -> Option<(ArmId, ArmId)> {
            let a = self.rng.random_range(0..self.k);
            let mut b = self.rng.random_range(0..self.k - 1);
            if b >= a {
                b += 1;
            }
            Some((ArmId(a), ArmId(b)))
        }
        fn observe(&mut self, _: ArmId, _: ArmId, _: ArmId) -> Result<()> {
            Ok(())
        }
        fn recommend(&self) -> ArmId {
            ArmId(0)
        }
    }

    #[test]
    fn playing_the_best_arm_has_no_regret() {
        let e = env(vec![0.2, 1.5, -0.3]);
        let mut p = Fixed {
            pair: None,
            best: ArmId(1),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = run_trial(&mut p, &e, 50, &mut rng).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn best_and_runner_up_costs_one_factor() {
        let e = env(vec![0.2, 1.5, -0.3, 1.1]);
        let mut p = Fixed {
            pair: Some((ArmId(1), ArmId(3))),
            best: ArmId(1),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = run_trial(&mut p, &e, 20, &mut rng).unwrap();
        let expected = e.comparison_factor(ArmId(1), ArmId(3));
        assert!(r.iter().all(|&x| x == expected));
    }

    #[test]
    fn uniform_policy_regret_is_flat() {
        let arms = EmbeddedArmSet::grid(20, 20, 0.2).unwrap();
        let sampler = GpSampler::new(&arms).unwrap();
        let traces: Vec<RegretTrace> = (0..200)
            .map(|trial| {
                let e = DuelEnvironment::new(sampler.sample(trial), 0.5).unwrap();
                let mut p = Uniform {
                    k: 400,
                    rng: ChaCha8Rng::seed_from_u64(1000 + trial),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(trial);
                RegretTrace::new(
                    PolicyKind::Btm,
                    trial as usize,
                    trial,
                    400,
                    run_trial(&mut p, &e, 100, &mut rng).unwrap(),
                )
            })
            .collect();
        let curve = &aggregate(&traces).unwrap()[0];
        // least-squares slope of mean regret against iteration
        let n = curve.mean_stepwise.len() as f64;
        let xm = (n - 1.0) / 2.0;
        let ym = curve.mean_stepwise.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, y) in curve.mean_stepwise.iter().enumerate() {
            sxy += (i as f64 - xm) * (y - ym);
            sxx += (i as f64 - xm).powi(2);
        }
        assert!((sxy / sxx).abs() < 0.0005, "slope {}", sxy / sxx);
    }

    #[test]
    fn experiment_is_reproducible_and_bounded() {
        let spec = ExperimentSpec {
            grid: GridShape { nx: 6, ny: 5 },
            horizon: 40,
            trials: 6,
            seed: 3,
            ..ExperimentSpec::default()
        };
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 24);
        for t in &a {
            assert_eq!(t.stepwise.len(), 40);
            assert!(t.stepwise.iter().all(|&r| (0.0..=1.0).contains(&r)));
            assert!(t.cumulative.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn resolved_spec_materializes_delta() {
        let spec = ExperimentSpec::default().resolved();
        assert_eq!(spec.delta, Some(1.0 / (2.0 * 100.0 * 2500.0)));
    }

    #[test]
    fn seeds_are_decorrelated() {
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
    }
}
