//! Wilson score intervals for binomial proportions.

use serde::{Deserialize, Serialize};

use super::num::{z_for_confidence, Real};
use super::StatsError;

/// A proportion with its Wilson interval. `ci_low ≤ rate ≤ ci_high` and the
/// interval stays inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate<F> {
    pub successes: u64,
    pub n: u64,
    pub rate: F,
    pub ci_low: F,
    pub ci_high: F,
    pub confidence: F,
}

/// Wilson score interval, from inverting the normal score test.
///
/// The boundary cases pin exactly: zero successes give a lower bound of 0,
/// all successes give an upper bound of 1.
pub fn wilson_ci<F: Real>(successes: u64, n: u64, confidence: F) -> Result<(F, F), StatsError> {
    if n == 0 {
        return Err(StatsError::ZeroN);
    }
    if successes > n {
        return Err(StatsError::BadCounts { successes, n });
    }
    let z = z_for_confidence(confidence).ok_or(StatsError::BadConfidence {
        value: confidence.to_f64().unwrap_or(f64::NAN),
    })?;

    let nf = F::c(n as f64);
    let p = F::c(successes as f64) / nf;
    let z2 = z * z;
    let denom = F::one() + z2 / nf;
    let center = (p + z2 / (F::c(2.0) * nf)) / denom;
    let half = z * ((p * (F::one() - p) + z2 / (F::c(4.0) * nf)) / nf).sqrt() / denom;

    let low = if successes == 0 {
        F::zero()
    } else {
        (center - half).max(F::zero())
    };
    let high = if successes == n {
        F::one()
    } else {
        (center + half).min(F::one())
    };
    Ok((low, high))
}

/// Bundle a count into a [`ProportionEstimate`] with its Wilson interval.
pub fn proportion_estimate<F: Real>(
    successes: u64,
    n: u64,
    confidence: F,
) -> Result<ProportionEstimate<F>, StatsError> {
    let (ci_low, ci_high) = wilson_ci(successes, n, confidence)?;
    Ok(ProportionEstimate {
        successes,
        n,
        rate: F::c(successes as f64) / F::c(n as f64),
        ci_low,
        ci_high,
        confidence,
    })
}
