use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SimilarityMatrix;

/// Lengthscale used on the unit square unless configured otherwise.
pub const DEFAULT_LENGTHSCALE: f64 = 0.2;

/// Grid dimensions, written `NXxNY` (e.g. `50x50`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridShape {
    pub nx: usize,
    pub ny: usize,
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.nx, self.ny)
    }
}

impl FromStr for GridShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid must look like 50x50, got {s:?}"));
        let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let nx = a.trim().parse().map_err(|_| bad())?;
        let ny = b.trim().parse().map_err(|_| bad())?;
        if nx == 0 || ny == 0 {
            return Err(bad());
        }
        Ok(Self { nx, ny })
    }
}

impl TryFrom<String> for GridShape {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GridShape> for String {
    fn from(g: GridShape) -> Self {
        g.to_string()
    }
}

impl GridShape {
    /// Evenly spaced coordinates on [0, 1]; a single point sits at 0.5.
    pub fn axis(n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.5],
            _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Arms embedded as points in ℝ^d, with the kernel lengthscale used to
/// relate them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedArmSet {
    points: Vec<Vec<f64>>,
    lengthscale: f64,
    grid: Option<GridShape>,
}

impl EmbeddedArmSet {
    pub fn new(points: Vec<Vec<f64>>, lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0) || !lengthscale.is_finite() {
            return Err(Error::Domain(format!(
                "lengthscale must be positive, got {lengthscale}"
            )));
        }
        let dim = points.first().map_or(0, Vec::len);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Domain(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
        }
        Ok(Self {
            points,
            lengthscale,
            grid: None,
        })
    }

    /// `nx × ny` grid on the unit square; arm `ix * ny + iy` sits at `(x[ix], y[iy])`.
    pub fn grid(nx: usize, ny: usize, lengthscale: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Domain(format!("grid {nx}x{ny} has no points")));
        }
        let xs = GridShape::axis(nx);
        let ys = GridShape::axis(ny);
        let points = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| vec![x, y]))
            .collect();
        let mut set = Self::new(points, lengthscale)?;
        set.grid = Some(GridShape { nx, ny });
        Ok(set)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn grid_shape(&self) -> Option<GridShape> {
        self.grid
    }

    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        se_kernel(&self.points[i], &self.points[j], self.lengthscale)
    }
}

/// Squared-exponential kernel `exp(-|a - b|² / (2 ℓ²))`.
pub fn se_kernel(a: &[f64], b: &[f64], lengthscale: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * lengthscale * lengthscale)).exp()
}

pub fn se_similarity(arms: &EmbeddedArmSet) -> Result<SimilarityMatrix> {
    SimilarityMatrix::from_fn(arms.len(), |i, j| arms.kernel(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn coincident_points_are_fully_similar() {
        let arms = EmbeddedArmSet::new(vec![vec![0.3, 0.3], vec![0.3, 0.3]], 0.2).unwrap();
        assert_eq!(se_similarity(&arms).unwrap().get(0, 1), 1.0);
    }

    #[test]
    fn half_similarity_distance() {
        let l = 0.2;
        let d = l * (2.0 * 2f64.ln()).sqrt();
        let arms = EmbeddedArmSet::new(vec![vec![0.0, 0.0], vec![d, 0.0]], l).unwrap();
        assert_abs_diff_eq!(
            se_similarity(&arms).unwrap().get(0, 1),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn decays_monotonically_with_distance() {
        let mut prev = 1.0;
        for step in 1..40 {
            let r = se_kernel(&[0.0], &[step as f64 * 0.05], 0.2);
            assert!(r < prev);
            prev = r;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn rejects_bad_lengthscale() {
        assert!(EmbeddedArmSet::new(vec![vec![0.0]], 0.0).is_err());
        assert!(EmbeddedArmSet::grid(3, 3, -1.0).is_err());
    }

    #[test]
    fn grid_shape_text() {
        assert_eq!(
            "50x50".parse::<GridShape>().unwrap(),
            GridShape { nx: 50, ny: 50 }
        );
        assert_eq!(GridShape { nx: 2, ny: 1 }.to_string(), "2x1");
        assert!("0x3".parse::<GridShape>().is_err());
        assert!("50".parse::<GridShape>().is_err());
    }

    #[test]
    fn grid_layout() {
        let g = EmbeddedArmSet::grid(3, 2, 0.2).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.points()[3], vec![0.5, 1.0]);
        assert_eq!(
            EmbeddedArmSet::grid(2, 1, 0.2).unwrap().points()[1],
            vec![1.0, 0.5]
        );
    }

    #[test]
    fn invariant_under_rigid_motion() {
        let pts = vec![vec![0.1, 0.2], vec![0.7, 0.4], vec![0.3, 0.9]];
        let (s, c) = (0.6f64.sin(), 0.6f64.cos());
        let moved: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| vec![c * p[0] - s * p[1] + 3.0, s * p[0] + c * p[1] - 1.5])
            .collect();
        let a = se_similarity(&EmbeddedArmSet::new(pts, 0.3).unwrap()).unwrap();
        let b = se_similarity(&EmbeddedArmSet::new(moved, 0.3).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(a.get(i, j), b.get(i, j), epsilon = 1e-12);
            }
        }
    }
}
