use crate::error::{Error, Result};

/// Half-width of the empirical win-rate confidence interval after `plays`
/// (possibly fractional) comparisons: `sqrt(ln(1/delta) / plays)`, or 1 when
/// nothing has been played yet.
pub fn confidence_radius(plays: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(plays >= 0.0) || !plays.is_finite() {
        return Err(Error::Domain(format!(
            "plays must be finite and >= 0, got {plays}"
        )));
    }
    if plays == 0.0 {
        return Ok(1.0);
    }
    Ok(((1.0 / delta).ln() / plays).sqrt())
}
