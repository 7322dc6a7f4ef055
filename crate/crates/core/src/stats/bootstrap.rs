//! Seeded percentile bootstrap for the deference asymmetry.
//!
//! Resampling is over whole trials, so the pairing of the two slots'
//! deference indicators inside a trial is preserved in every replicate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::num::Real;
use super::StatsError;
use crate::seeds::rng_from_seed;

/// Asymmetry point estimate with a percentile bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryEstimate<F> {
    pub point: F,
    pub ci_low: F,
    pub ci_high: F,
    pub iterations: u64,
    pub seed: u64,
}

/// Linear-interpolation quantile of an ascending-sorted slice.
fn quantile_sorted<F: Real>(sorted: &[F], q: F) -> F {
    let n = sorted.len();
    let pos = F::c((n - 1) as f64) * q;
    let lo = pos.floor();
    let idx = lo.to_usize().unwrap_or(0).min(n - 1);
    if idx + 1 >= n {
        return sorted[n - 1];
    }
    sorted[idx] + (pos - lo) * (sorted[idx + 1] - sorted[idx])
}

fn asym_of<F: Real>(s1: u64, s2: u64, n: usize) -> F {
    (F::c(s2 as f64) - F::c(s1 as f64)) / F::c(n as f64)
}

/// Bootstrap the asymmetry (slot-2 rate minus slot-1 rate) of paired
/// deference flags. The point estimate comes from the original sample;
/// the interval is the central percentile interval of `iterations`
/// replicates, resampled with replacement; identical `(flags, seed)`
/// reproduce identical estimates.
pub fn bootstrap_asymmetry_flags<F: Real>(
    flags: &[(bool, bool)],
    iterations: usize,
    confidence: F,
    seed: u64,
) -> Result<AsymmetryEstimate<F>, StatsError> {
    if flags.is_empty() {
        return Err(StatsError::Empty {
            context: "bootstrap over zero trials",
        });
    }
    if iterations == 0 {
        return Err(StatsError::ZeroIterations);
    }
    if !(confidence > F::zero() && confidence < F::one()) {
        return Err(StatsError::BadConfidence {
            value: confidence.to_f64().unwrap_or(f64::NAN),
        });
    }

    let n = flags.len();
    let (orig1, orig2) = flags.iter().fold((0u64, 0u64), |(a, b), &(f1, f2)| {
        (a + f1 as u64, b + f2 as u64)
    });
    let point = asym_of(orig1, orig2, n);

    let mut rng = rng_from_seed(seed);
    let mut replicates: Vec<F> = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut s1 = 0u64;
        let mut s2 = 0u64;
        for _ in 0..n {
            let (f1, f2) = flags[rng.gen_range(0..n as u64) as usize];
            s1 += f1 as u64;
            s2 += f2 as u64;
        }
        replicates.push(asym_of(s1, s2, n));
    }
    replicates.sort_by(|a, b| a.partial_cmp(b).expect("replicates are finite"));

    let alpha = (F::one() - confidence) / F::c(2.0);
    Ok(AsymmetryEstimate {
        point,
        ci_low: quantile_sorted(&replicates, alpha),
        ci_high: quantile_sorted(&replicates, F::one() - alpha),
        iterations: iterations as u64,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn synthetic_flags(q1: f64, q2: f64, n: usize, seed: u64) -> Vec<(bool, bool)> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| (rng.gen::<f64>() < q1, rng.gen::<f64>() < q2))
            .collect()
    }

    #[test]
    fn deterministic_per_seed() {
        let flags = synthetic_flags(0.3, 0.6, 200, 1);
        let a = bootstrap_asymmetry_flags(&flags, 500, 0.95f64, 7).unwrap();
        let b = bootstrap_asymmetry_flags(&flags, 500, 0.95f64, 7).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_asymmetry_flags(&flags, 500, 0.95f64, 8).unwrap();
        assert_ne!((a.ci_low, a.ci_high), (c.ci_low, c.ci_high));
    }

    #[test]
    fn degenerate_data_collapses_interval() {
        // Every trial identical: resamples have zero variance at any
        // iteration count.
        let flags = vec![(false, true); 40];
        let est = bootstrap_asymmetry_flags(&flags, 1000, 0.95f64, 3).unwrap();
        assert_eq!(est.point, 1.0);
        assert_eq!(est.ci_low, 1.0);
        assert_eq!(est.ci_high, 1.0);
    }

    #[test]
    fn interval_brackets_point_on_typical_data() {
        let flags = synthetic_flags(0.25, 0.6, 498, 11);
        let est = bootstrap_asymmetry_flags(&flags, 2000, 0.95f64, 5).unwrap();
        assert!(est.ci_low <= est.point && est.point <= est.ci_high);
        assert!(est.ci_low > -1.0 && est.ci_high < 1.0);
    }

    #[test]
    fn width_tracks_normal_approximation() {
        // Independent Bernoulli flags at the published rates; the
        // percentile width should match 2·z·SE from the realized sample
        // (the in-test Monte-Carlo oracle) to well within 0.03.
        let flags = synthetic_flags(0.25, 0.60, 498, 17);
        let n = flags.len() as f64;
        let p1 = flags.iter().filter(|f| f.0).count() as f64 / n;
        let p2 = flags.iter().filter(|f| f.1).count() as f64 / n;
        let se = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / n).sqrt();
        let expected_width = 2.0 * 1.959964 * se;

        let est = bootstrap_asymmetry_flags(&flags, 10_000, 0.95f64, 23).unwrap();
        let width = est.ci_high - est.ci_low;
        assert!(
            (width - expected_width).abs() < 0.03,
            "width {width}, normal approximation {expected_width}"
        );
        assert!(est.ci_low <= 0.35 && 0.35 <= est.ci_high);
    }

    #[test]
    fn single_iteration_is_valid() {
        let flags = synthetic_flags(0.2, 0.7, 50, 2);
        let est = bootstrap_asymmetry_flags(&flags, 1, 0.95f64, 9).unwrap();
        assert_eq!(est.ci_low, est.ci_high);
        assert_eq!(est.iterations, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            bootstrap_asymmetry_flags::<f64>(&[], 100, 0.95, 0),
            Err(StatsError::Empty { .. })
        ));
        let flags = vec![(true, false)];
        assert!(matches!(
            bootstrap_asymmetry_flags::<f64>(&flags, 0, 0.95, 0),
            Err(StatsError::ZeroIterations)
        ));
        assert!(matches!(
            bootstrap_asymmetry_flags::<f64>(&flags, 10, 1.0, 0),
            Err(StatsError::BadConfidence { .. })
        ));
    }

    #[test]
    fn quantile_interpolates_linearly() {
        let xs = [0.0f64, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 0.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 3.0);
        assert_eq!(quantile_sorted(&xs, 0.5), 1.5);
        assert!((quantile_sorted(&xs, 0.25) - 0.75).abs() < 1e-12);
    }
}
