use statrs::distribution::{ContinuousCDF, Normal};

use super::MetaError;

/// Two-sided standard normal quantile for a confidence level.
pub fn z_for_confidence(confidence: f64) -> Result<f64, MetaError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(MetaError::BadConfidence(confidence));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// Wilson score interval for `successes` out of `n`; `(0, 1)` when `n == 0`.
pub fn wilson_interval(successes: u64, n: u64, confidence: f64) -> Result<(f64, f64), MetaError> {
    if successes > n {
        return Err(MetaError::BadCount { successes, n });
    }
    let z = z_for_confidence(confidence)?;
    if n == 0 {
        return Ok((0.0, 1.0));
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    Ok((lo, hi))
}

pub fn wilson_width(successes: u64, n: u64, confidence: f64) -> Result<f64, MetaError> {
    let (lo, hi) = wilson_interval(successes, n, confidence)?;
    Ok(hi - lo)
}
