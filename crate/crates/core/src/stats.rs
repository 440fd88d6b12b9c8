//! Error-rate statistics.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Per-round rate for a block failure probability accumulated over `rounds`
/// rounds: `1 − (1 − p_total)^(1/rounds)`.
pub fn per_round_ler(p_total: f64, rounds: usize) -> f64 {
    assert!(rounds >= 1, "rounds must be ≥ 1");
    if rounds == 1 {
        return p_total;
    }
    -(((1.0 - p_total).ln()) / rounds as f64).exp_m1()
}

/// Inverse of [`per_round_ler`].
pub fn total_from_per_round(p_round: f64, rounds: usize) -> f64 {
    1.0 - (1.0 - p_round).powi(rounds as i32)
}

/// Wilson score interval for `failures` out of `n` trials.
pub fn wilson_ci(failures: usize, n: usize, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("Wilson interval needs n ≥ 1".into()));
    }
    if failures > n {
        return Err(Error::InvalidParameter(format!("failures {failures} exceed trials {n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence must be in (0, 1), got {confidence}")));
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n_f = n as f64;
    let phat = failures as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (phat + z2 / (2.0 * n_f)) / denom;
    let half = z * (phat * (1.0 - phat) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let low = if failures == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if failures == n { 1.0 } else { (center + half).min(1.0) };
    Ok((low, high))
}
