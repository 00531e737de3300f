use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SimilarityMatrix;

pub const CHANNELS: usize = 16;

/// Polarity assignment for a 16-channel electrode array. Amplitude and
/// frequency ride along as labels and never enter the similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ElectrodeConfig {
    polarity: [i8; CHANNELS],
    pub amplitude: Option<f64>,
    pub frequency: Option<f64>,
}

impl ElectrodeConfig {
    pub fn new(polarity: [i8; CHANNELS]) -> Result<Self> {
        if polarity.iter().any(|p| !matches!(p, -1..=1)) {
            return Err(Error::DegenerateConfig(
                "polarities must be -1, 0 or +1".into(),
            ));
        }
        if polarity.iter().all(|&p| p == 0) {
            return Err(Error::DegenerateConfig("no active channel".into()));
        }
        Ok(Self {
            polarity,
            amplitude: None,
            frequency: None,
        })
    }

    pub fn polarity(&self) -> &[i8; CHANNELS] {
        &self.polarity
    }

    /// Same channels with every polarity flipped.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        for p in &mut out.polarity {
            *p = -*p;
        }
        out
    }
}

impl FromStr for ElectrodeConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != CHANNELS {
            return Err(Error::DegenerateConfig(format!(
                "expected {CHANNELS} channel symbols, got {} in {s:?}",
                chars.len()
            )));
        }
        let mut polarity = [0i8; CHANNELS];
        for (slot, ch) in polarity.iter_mut().zip(chars) {
            *slot = match ch {
                '+' => 1,
                '-' => -1,
                '0' => 0,
                other => {
                    return Err(Error::DegenerateConfig(format!(
                        "bad channel symbol {other:?} in {s:?}"
                    )))
                }
            };
        }
        Self::new(polarity)
    }
}

impl fmt::Display for ElectrodeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.polarity {
            f.write_str(match p {
                1 => "+",
                -1 => "-",
                _ => "0",
            })?;
        }
        Ok(())
    }
}

impl TryFrom<String> for ElectrodeConfig {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ElectrodeConfig> for String {
    fn from(c: ElectrodeConfig) -> Self {
        c.to_string()
    }
}

/// Electrode sites and the points at which fields are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub sites: Vec<[f64; 3]>,
    pub points: Vec<[f64; 3]>,
    pub softening: f64,
}

impl Default for FieldGrid {
    /// 4×4 array at unit spacing in the z = 0 plane, sampled on a 10×10×5
    /// box above it, softening half a spacing.
    fn default() -> Self {
        let sites = (0..CHANNELS)
            .map(|c| [(c % 4) as f64, (c / 4) as f64, 0.0])
            .collect();
        let lin = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        };
        let (xs, ys, zs) = (lin(-0.5, 3.5, 10), lin(-0.5, 3.5, 10), lin(0.25, 2.25, 5));
        let mut points = Vec::with_capacity(500);
        for &z in &zs {
            for &y in &ys {
                for &x in &xs {
                    points.push([x, y, z]);
                }
            }
        }
        Self {
            sites,
            points,
            softening: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub values: Vec<f64>,
}

/// Superposed softened point-source potentials `Σ p_c / sqrt(d² + s²)`.
pub fn potential_field(config: &ElectrodeConfig, grid: &FieldGrid) -> Result<PotentialField> {
    if config.polarity.iter().all(|&p| p == 0) {
        return Err(Error::DegenerateConfig("no active channel".into()));
    }
    if grid.sites.len() != CHANNELS {
        return Err(Error::Domain(format!(
            "grid has {} sites, expected {CHANNELS}",
            grid.sites.len()
        )));
    }
    let s2 = grid.softening * grid.softening;
    let values = grid
        .points
        .iter()
        .map(|p| {
            config
                .polarity
                .iter()
                .zip(&grid.sites)
                .filter(|(&pol, _)| pol != 0)
                .map(|(&pol, site)| {
                    let d2: f64 = (0..3).map(|k| (p[k] - site[k]).powi(2)).sum();
                    f64::from(pol) / (d2 + s2).sqrt()
                })
                .sum()
        })
        .collect();
    Ok(PotentialField { values })
}

/// Pearson correlation of two fields sampled on the same grid.
pub fn pearson(a: &PotentialField, b: &PotentialField) -> Result<f64> {
    let (x, y) = (&a.values, &b.values);
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::UndefinedCorrelation(format!(
            "fields have {} and {} samples",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (u, v) in x.iter().zip(y) {
        let (du, dv) = (u - mx, v - my);
        sxy += du * dv;
        sxx += du * du;
        syy += dv * dv;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant field".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn electrode_similarity(
    configs: &[ElectrodeConfig],
    grid: &FieldGrid,
) -> Result<SimilarityMatrix> {
    if configs.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 configurations, got {}",
            configs.len()
        )));
    }
    let fields = configs
        .iter()
        .map(|c| potential_field(c, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut first_err = None;
    let m = SimilarityMatrix::from_fn(configs.len(), |i, j| {
        match pearson(&fields[i], &fields[j]) {
            Ok(r) => r,
            Err(e) => {
                first_err.get_or_insert(e);
                0.0
            }
        }
    })?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(s: &str) -> ElectrodeConfig {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        let c = cfg("+-0000000000000+");
        assert_eq!(c.polarity()[0], 1);
        assert_eq!(c.polarity()[1], -1);
        assert_eq!(c.to_string(), "+-0000000000000+");
        assert!("0000000000000000".parse::<ElectrodeConfig>().is_err());
        assert!("+-0".parse::<ElectrodeConfig>().is_err());
        assert!("+-00000000000x0+".parse::<ElectrodeConfig>().is_err());
    }

    #[test]
    fn single_positive_channel_field_is_positive() {
        let f = potential_field(&cfg("00000+0000000000"), &FieldGrid::default()).unwrap();
        assert!(f.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn reversal_negates_field() {
        let g = FieldGrid::default();
        let c = cfg("+-0+00-0+0000-0+");
        let a = potential_field(&c, &g).unwrap();
        let b = potential_field(&c.reversed(), &g).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn pearson_basic_identities() {
        let a = potential_field(&cfg("+-00+00000000000"), &FieldGrid::default()).unwrap();
        let neg = PotentialField {
            values: a.values.iter().map(|v| -v).collect(),
        };
        let shifted = PotentialField {
            values: a.values.iter().map(|v| v + 3.5).collect(),
        };
        let scaled = PotentialField {
            values: a.values.iter().map(|v| 2.5 * v - 1.0).collect(),
        };
        assert_abs_diff_eq!(pearson(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pearson(&a, &neg).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pearson(&a, &shifted).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pearson(&a, &scaled).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_field_has_no_correlation() {
        let a = PotentialField {
            values: vec![1.0; 10],
        };
        let b = PotentialField {
            values: (0..10).map(f64::from).collect(),
        };
        assert!(matches!(
            pearson(&a, &b),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn similarity_matrix_properties() {
        let c = cfg("+-0+00-0+0000-0+");
        let configs = vec![c.clone(), c.clone(), c.reversed(), cfg("00000+0000-00000")];
        let m = electrode_similarity(&configs, &FieldGrid::default()).unwrap();
        assert_abs_diff_eq!(m.get(0, 1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.get(0, 2), -1.0, epsilon = 1e-12);
        for i in 0..4 {
            assert_eq!(m.get(i, i), 1.0);
            for j in 0..4 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert!(electrode_similarity(&configs[..1], &FieldGrid::default()).is_err());
    }
}
