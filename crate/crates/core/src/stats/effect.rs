//! Effect size and power for two-proportion comparisons.

use super::num::{probit, Real};
use super::StatsError;

/// Cohen's h: 2·arcsin(√p1) − 2·arcsin(√p2).
pub fn cohens_h<F: Real>(p1: F, p2: F) -> Result<F, StatsError> {
    for p in [p1, p2] {
        if !(F::zero()..=F::one()).contains(&p) {
            return Err(StatsError::RatingOutOfRange {
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let two = F::c(2.0);
    Ok(two * p1.sqrt().asin() - two * p2.sqrt().asin())
}

/// Per-group sample size for a two-proportion test under the arcsine
/// approximation: n = ceil((z_{1−α/2} + z_{power})² / h²).
pub fn power_sample_size<F: Real>(h: F, alpha: F, power: F) -> Result<u64, StatsError> {
    if h == F::zero() || !h.is_finite() {
        return Err(StatsError::BadEffect {
            value: h.to_f64().unwrap_or(f64::NAN),
        });
    }
    let bad = || StatsError::BadPowerInputs {
        alpha: alpha.to_f64().unwrap_or(f64::NAN),
        power: power.to_f64().unwrap_or(f64::NAN),
    };
    let z_alpha = probit(F::one() - alpha / F::c(2.0)).ok_or_else(bad)?;
    let z_power = probit(power).ok_or_else(bad)?;
    if z_alpha <= F::zero() {
        return Err(bad());
    }
    let ratio = (z_alpha + z_power) / h.abs();
    let n = (ratio * ratio).ceil();
    Ok(n.to_u64().expect("sample size fits u64"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Frozen from an independent double-precision oracle.
    const H_STATUS: f64 = 0.30332996376749644;
    const H_CAPABILITY: f64 = 0.7102493100344525;

    #[test]
    fn matches_oracle_on_published_rates() {
        assert_relative_eq!(
            cohens_h(0.592f64, 0.441).unwrap(),
            H_STATUS,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cohens_h(0.779f64, 0.441).unwrap(),
            H_CAPABILITY,
            max_relative = 1e-12
        );
    }

    #[test]
    fn identical_rates_give_zero() {
        for p in [0.0f64, 0.25, 0.5, 1.0] {
            assert_eq!(cohens_h(p, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(cohens_h(1.2f64, 0.5).is_err());
        assert!(cohens_h(0.5f64, -0.1).is_err());
    }

    #[test]
    fn power_sample_size_matches_oracle() {
        // (1.959964 + 0.841621)² / 0.25 = 31.40, ceiled.
        assert_eq!(power_sample_size(0.5f64, 0.05, 0.80).unwrap(), 32);
        assert_eq!(power_sample_size(0.5f64, 0.05, 0.95).unwrap(), 52);
    }

    #[test]
    fn power_monotone_in_power() {
        let n80 = power_sample_size(0.5f64, 0.05, 0.80).unwrap();
        let n95 = power_sample_size(0.5f64, 0.05, 0.95).unwrap();
        assert!(n95 > n80);
    }

    #[test]
    fn doubling_h_quarters_n_up_to_ceiling() {
        let n1 = power_sample_size(0.25f64, 0.05, 0.80).unwrap();
        let n2 = power_sample_size(0.5f64, 0.05, 0.80).unwrap();
        // Exact quartering up to the two ceil operations.
        assert!(n1 >= 4 * n2 - 4 && n1 <= 4 * n2 + 4, "n1={n1} n2={n2}");
    }

    #[test]
    fn zero_effect_rejected() {
        assert!(matches!(
            power_sample_size(0.0f64, 0.05, 0.8),
            Err(StatsError::BadEffect { .. })
        ));
    }

    proptest! {
        #[test]
        fn antisymmetric_and_bounded(p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            let h = cohens_h(p1, p2).unwrap();
            let h_rev = cohens_h(p2, p1).unwrap();
            prop_assert!((h + h_rev).abs() < 1e-12);
            prop_assert!(h.abs() <= std::f64::consts::PI + 1e-12);
        }

        #[test]
        fn negative_h_gives_same_n(h in 0.05f64..1.5) {
            let a = power_sample_size(h, 0.05, 0.8).unwrap();
            let b = power_sample_size(-h, 0.05, 0.8).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
