use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{ArmId, SimilarityMatrix};

/// Fractional increments to an arm's wins (`kappa`) and plays (`tau`)
/// induced by one duel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateWeights {
    pub kappa: f64,
    pub tau: f64,
}

impl UpdateWeights {
    pub const NONE: Self = Self {
        kappa: 0.0,
        tau: 0.0,
    };
    pub const WIN: Self = Self {
        kappa: 1.0,
        tau: 1.0,
    };
    pub const LOSS: Self = Self {
        kappa: 0.0,
        tau: 1.0,
    };

    pub fn is_none(&self) -> bool {
        self.tau == 0.0 && self.kappa == 0.0
    }
}

/// Update received by arm `k` when `winner` beat `loser`.
///
/// The dueled arms get the plain win/loss increments. Any other arm is
/// updated only when it is positively similar to both participants; its
/// play increment is `(r_wk + r_lk) / (1 + r_wl)` capped at 1, and its win
/// increment is that times `ln r_lk / (ln r_wk + ln r_lk)`.
pub fn corr_update_weights(
    k: ArmId,
    winner: ArmId,
    loser: ArmId,
    similarity: &SimilarityMatrix,
) -> Result<UpdateWeights> {
    if winner == loser {
        return Err(Error::Domain(format!(
            "winner and loser are both arm {winner}"
        )));
    }
    if k == winner {
        return Ok(UpdateWeights::WIN);
    }
    if k == loser {
        return Ok(UpdateWeights::LOSS);
    }
    let r_wk = similarity.get(winner.index(), k.index());
    let r_lk = similarity.get(loser.index(), k.index());
    let r_wl = similarity.get(winner.index(), loser.index());
    weights_from_similarities(r_wk, r_lk, r_wl).ok_or(Error::DegenerateSimilarity {
        k,
        winner,
        loser,
    })
}

/// Scalar form of the off-pair rule. `None` signals the degenerate case
/// where `k` is identical to both dueled arms.
pub(crate) fn weights_from_similarities(r_wk: f64, r_lk: f64, r_wl: f64) -> Option<UpdateWeights> {
    if r_wk <= 0.0 || r_lk <= 0.0 {
        return Some(UpdateWeights::NONE);
    }
    let ln_w = r_wk.ln();
    let ln_l = r_lk.ln();
    let denom = ln_w + ln_l;
    if denom == 0.0 {
        return None;
    }
    let fraction = ln_l / denom;
    let tau = ((r_wk + r_lk) / (1.0 + r_wl)).min(1.0);
    Some(UpdateWeights {
        kappa: fraction * tau,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn chain() -> SimilarityMatrix {
        SimilarityMatrix::from_rows(vec![
            vec![1.0, 0.6, 0.8],
            vec![0.6, 1.0, 0.5],
            vec![0.8, 0.5, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn dueled_arms_collapse_to_plain_updates() {
        let s = chain();
        let (w, l) = (ArmId(0), ArmId(1));
        assert_eq!(
            corr_update_weights(w, w, l, &s).unwrap(),
            UpdateWeights::WIN
        );
        assert_eq!(
            corr_update_weights(l, w, l, &s).unwrap(),
            UpdateWeights::LOSS
        );
    }

    #[test]
    fn third_arm_in_chain() {
        // mpmath: tau = 1.3/1.6, kappa = ln 0.5/(ln 0.8 + ln 0.5) * tau
        let u = corr_update_weights(ArmId(2), ArmId(0), ArmId(1), &chain()).unwrap();
        assert_abs_diff_eq!(u.tau, 0.8125, epsilon = 1e-15);
        assert_abs_diff_eq!(u.kappa, 0.614_632_522_859_899_4, epsilon = 1e-12);
    }

    #[test]
    fn tau_is_clamped_and_ratio_kept() {
        // raw tau = 1.8 / 1.7 > 1
        let u = weights_from_similarities(0.9, 0.9, 0.7).unwrap();
        assert_eq!(u.tau, 1.0);
        assert_abs_diff_eq!(u.kappa, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn non_positive_similarity_skips() {
        assert_eq!(
            weights_from_similarities(0.0, 0.7, 0.2),
            Some(UpdateWeights::NONE)
        );
        assert_eq!(
            weights_from_similarities(0.7, -0.2, 0.2),
            Some(UpdateWeights::NONE)
        );
    }

    #[test]
    fn identical_to_both_is_degenerate() {
        let s = SimilarityMatrix::from_fn(3, |_, _| 1.0).unwrap();
        let err = corr_update_weights(ArmId(2), ArmId(0), ArmId(1), &s).unwrap_err();
        assert!(matches!(err, Error::DegenerateSimilarity { .. }));
    }

    #[test]
    fn near_winner_counts_as_win() {
        let u = weights_from_similarities(0.999_999, 0.3, 0.3).unwrap();
        assert!(u.kappa / u.tau > 0.999);
        let u = weights_from_similarities(0.3, 0.999_999, 0.3).unwrap();
        assert!(u.kappa / u.tau < 0.001);
    }

    proptest! {
        #[test]
        fn kappa_tau_bounds(a in -1.0f64..=1.0, b in -1.0f64..=1.0, c in -1.0f64..=1.0) {
            if let Some(u) = weights_from_similarities(a, b, c) {
                prop_assert!(0.0 <= u.kappa && u.kappa <= u.tau && u.tau <= 1.0, "{u:?}");
            }
        }
    }
}
