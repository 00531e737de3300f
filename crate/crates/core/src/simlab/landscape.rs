use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{se_kernel, EmbeddedArmSet, GridShape};
use crate::ArmId;

const JITTERS: [f64; 3] = [1e-8, 1e-7, 1e-6];

/// Hidden utility of every arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityField {
    pub values: Vec<f64>,
    pub lengthscale: f64,
    pub seed: u64,
}

impl UtilityField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Arm of highest utility, lowest id on ties.
    pub fn best_arm(&self) -> ArmId {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        ArmId(best)
    }
}

#[derive(Debug, Clone)]
enum Factor {
    Dense(DMatrix<f64>),
    /// Grid covariances factor as a Kronecker product of per-axis factors.
    Kronecker {
        x: DMatrix<f64>,
        y: DMatrix<f64>,
    },
}

/// Zero-mean, unit-variance squared-exponential GP prior over a fixed arm
/// set, factored once and sampled many times.
#[derive(Debug, Clone)]
pub struct GpSampler {
    factor: Factor,
    num_arms: usize,
    lengthscale: f64,
}

impl GpSampler {
    pub fn new(arms: &EmbeddedArmSet) -> Result<Self> {
        let l = arms.lengthscale();
        let factor = match arms.grid_shape() {
            Some(GridShape { nx, ny }) => Factor::Kronecker {
                x: cholesky_with_jitter(axis_covariance(nx, l))?,
                y: cholesky_with_jitter(axis_covariance(ny, l))?,
            },
            None => {
                let n = arms.len();
                let cov = DMatrix::from_fn(n, n, |i, j| arms.kernel(i, j));
                Factor::Dense(cholesky_with_jitter(cov)?)
            }
        };
        Ok(Self {
            factor,
            num_arms: arms.len(),
            lengthscale: l,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn sample(&self, seed: u64) -> UtilityField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..self.num_arms)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let values = match &self.factor {
            Factor::Dense(l) => (l * DVector::from_vec(z)).data.into(),
            Factor::Kronecker { x, y } => {
                let (nx, ny) = (x.nrows(), y.nrows());
                // z laid out as an nx × ny matrix with arm a * ny + b at (a, b)
                let zm = DMatrix::from_row_slice(nx, ny, &z);
                let f = x * zm * y.transpose();
                (0..nx)
                    .flat_map(|i| (0..ny).map(move |j| (i, j)))
                    .map(|(i, j)| f[(i, j)])
                    .collect()
            }
        };
        UtilityField {
            values,
            lengthscale: self.lengthscale,
            seed,
        }
    }
}

/// One-shot draw: factor the covariance of `arms` and sample with `seed`.
pub fn sample_gp_utility(arms: &EmbeddedArmSet, seed: u64) -> Result<UtilityField> {
    Ok(GpSampler::new(arms)?.sample(seed))
}

fn axis_covariance(n: usize, lengthscale: f64) -> DMatrix<f64> {
    let axis = GridShape::axis(n);
    DMatrix::from_fn(n, n, |i, j| se_kernel(&[axis[i]], &[axis[j]], lengthscale))
}

fn cholesky_with_jitter(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    for jitter in JITTERS {
        let mut m = cov.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            return Ok(ch.l());
        }
    }
    Err(Error::Numerical(format!(
        "covariance of {n} arms is not positive definite even with jitter {}",
        JITTERS[JITTERS.len() - 1]
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(sampler: &GpSampler, seeds: u64) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let draws: Vec<Vec<f64>> = (0..seeds).map(|s| sampler.sample(s).values).collect();
        let k = sampler.num_arms();
        let n = seeds as f64;
        let mean: Vec<f64> = (0..k)
            .map(|i| draws.iter().map(|d| d[i]).sum::<f64>() / n)
            .collect();
        let var: Vec<f64> = (0..k)
            .map(|i| draws.iter().map(|d| (d[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0))
            .collect();
        (mean, var, draws)
    }

    #[test]
    fn zero_mean_unit_variance() {
        let arms = EmbeddedArmSet::new(
            vec![
                vec![0.1, 0.1],
                vec![0.5, 0.2],
                vec![0.9, 0.8],
                vec![0.3, 0.7],
                vec![0.31, 0.7],
            ],
            0.2,
        )
        .unwrap();
        let sampler = GpSampler::new(&arms).unwrap();
        let (mean, var, _) = moments(&sampler, 2000);
        let bound = 3.0 / 2000f64.sqrt();
        for (m, v) in mean.iter().zip(&var) {
            assert!(m.abs() < bound, "mean {m}");
            assert!((v - 1.0).abs() < 0.15, "variance {v}");
        }
    }

    #[test]
    fn nearby_arms_are_strongly_correlated() {
        let l = 0.2;
        let arms = EmbeddedArmSet::new(vec![vec![0.4, 0.4], vec![0.4 + l / 10.0, 0.4]], l).unwrap();
        let sampler = GpSampler::new(&arms).unwrap();
        let (mean, var, draws) = moments(&sampler, 2000);
        let cov = draws
            .iter()
            .map(|d| (d[0] - mean[0]) * (d[1] - mean[1]))
            .sum::<f64>()
            / 1999.0;
        let corr = cov / (var[0] * var[1]).sqrt();
        assert!(corr > 0.95, "correlation {corr}");
    }

    #[test]
    fn grid_factor_matches_dense_covariance() {
        let grid = EmbeddedArmSet::grid(4, 3, 0.3).unwrap();
        let dense = EmbeddedArmSet::new(grid.points().to_vec(), 0.3).unwrap();
        let g = GpSampler::new(&grid).unwrap();
        let d = GpSampler::new(&dense).unwrap();
        let lk = match &g.factor {
            Factor::Kronecker { x, y } => x.kronecker(y),
            _ => unreachable!(),
        };
        let ld = match &d.factor {
            Factor::Dense(l) => l.clone(),
            _ => unreachable!(),
        };
        let diff = (&lk * lk.transpose() - &ld * ld.transpose()).abs().max();
        assert!(diff < 1e-6, "{diff}");
        // Kronecker product of lower-triangular factors is itself the Cholesky factor
        assert!((lk - ld).abs().max() < 1e-3);
    }

    #[test]
    fn deterministic_per_seed() {
        let sampler = GpSampler::new(&EmbeddedArmSet::grid(5, 5, 0.2).unwrap()).unwrap();
        assert_eq!(sampler.sample(7), sampler.sample(7));
        assert_ne!(sampler.sample(7), sampler.sample(8));
    }

    #[test]
    fn full_grid_factorizes() {
        let sampler = GpSampler::new(&EmbeddedArmSet::grid(50, 50, 0.2).unwrap()).unwrap();
        let f = sampler.sample(1);
        assert_eq!(f.len(), 2500);
        assert!(f.values.iter().all(|v| v.is_finite()));
    }
}
