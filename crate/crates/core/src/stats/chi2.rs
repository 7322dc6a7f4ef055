//! Two-proportion chi-square on a 2×2 table.
//!
//! Both variants are exposed. The continuity-corrected statistic is what
//! the planned contrasts use: recomputing the published contrast table from
//! its rounded counts reproduces the printed statistics and p-values only
//! under the correction (e.g. 22.33 corrected vs 22.93 uncorrected for the
//! first contrast). The plain Pearson statistic is kept for callers who
//! want the textbook form.

use super::num::{chi_square_sf, Real};
use super::StatsError;

fn check_group(successes: u64, n: u64) -> Result<(), StatsError> {
    if n == 0 {
        return Err(StatsError::ZeroN);
    }
    if successes > n {
        return Err(StatsError::BadCounts { successes, n });
    }
    Ok(())
}

fn chi_square_impl<F: Real>(
    succ1: u64,
    n1: u64,
    succ2: u64,
    n2: u64,
    corrected: bool,
) -> Result<(F, F), StatsError> {
    check_group(succ1, n1)?;
    check_group(succ2, n2)?;

    let a = F::c(succ1 as f64);
    let b = F::c((n1 - succ1) as f64);
    let c = F::c(succ2 as f64);
    let d = F::c((n2 - succ2) as f64);
    let total = a + b + c + d;

    // A zero margin (all success or all failure overall) carries no
    // information; the test degenerates to chi2 = 0, p = 1.
    let col1 = a + c;
    let col2 = b + d;
    if col1 == F::zero() || col2 == F::zero() {
        return Ok((F::zero(), F::one()));
    }

    let cross = (a * d - b * c).abs();
    let num = if corrected {
        (cross - total / F::c(2.0)).max(F::zero())
    } else {
        cross
    };
    let denom = (a + b) * (c + d) * col1 * col2;
    let chi2 = total * num * num / denom;
    Ok((chi2, chi_square_sf(chi2, 1)))
}

/// Chi-square with Yates continuity correction; p from chi²(1).
pub fn chi_square_2x2<F: Real>(
    succ1: u64,
    n1: u64,
    succ2: u64,
    n2: u64,
) -> Result<(F, F), StatsError> {
    chi_square_impl(succ1, n1, succ2, n2, true)
}

/// Plain Pearson chi-square, no continuity correction.
pub fn chi_square_2x2_uncorrected<F: Real>(
    succ1: u64,
    n1: u64,
    succ2: u64,
    n2: u64,
) -> Result<(F, F), StatsError> {
    chi_square_impl(succ1, n1, succ2, n2, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Frozen from an independent double-precision oracle over the four
    // published contrasts' recovered counts.
    const CASES: [(u64, u64, u64, u64, f64, f64, f64, f64); 4] = [
        // (s1, n1, s2, n2, chi2_corrected, p_corrected_form, chi2_plain, p_plain)
        (
            295,
            498,
            219,
            497,
            22.32721267819732,
            2.299251859726101e-6,
            22.93075891666205,
            1.679428424284133e-6,
        ),
        (
            388,
            498,
            219,
            497,
            118.37550935277099,
            1.434826953723381e-27,
            119.79410230385533,
            7.017960493780783e-28,
        ),
        (
            387,
            499,
            388,
            498,
            0.003501499000026236,
            0.9528139441915642,
            0.01830534998726039,
            0.8923768472036333,
        ),
        (
            369,
            498,
            387,
            499,
            1.443514239362919,
            0.22957150566846873,
            1.6267401805703918,
            0.20215452088470454,
        ),
    ];

    #[test]
    fn matches_oracle_on_published_contrast_counts() {
        for &(s1, n1, s2, n2, cy, py, cu, pu) in &CASES {
            let (chi, p) = chi_square_2x2::<f64>(s1, n1, s2, n2).unwrap();
            assert_relative_eq!(chi, cy, max_relative = 1e-12);
            assert_relative_eq!(p, py, max_relative = 1e-9);
            let (chi, p) = chi_square_2x2_uncorrected::<f64>(s1, n1, s2, n2).unwrap();
            assert_relative_eq!(chi, cu, max_relative = 1e-12);
            assert_relative_eq!(p, pu, max_relative = 1e-9);
        }
    }

    #[test]
    fn equal_proportions_give_zero() {
        let (chi, p) = chi_square_2x2::<f64>(50, 100, 50, 100).unwrap();
        assert_eq!(chi, 0.0);
        assert_eq!(p, 1.0);
        let (chi, p) = chi_square_2x2_uncorrected::<f64>(50, 100, 50, 100).unwrap();
        assert_eq!(chi, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn zero_margin_degenerates_to_null() {
        // All failures in both groups.
        let (chi, p) = chi_square_2x2::<f64>(0, 10, 0, 20).unwrap();
        assert_eq!((chi, p), (0.0, 1.0));
        // All successes in both groups.
        let (chi, p) = chi_square_2x2_uncorrected::<f64>(10, 10, 20, 20).unwrap();
        assert_eq!((chi, p), (0.0, 1.0));
    }

    #[test]
    fn rejects_inconsistent_counts() {
        assert!(matches!(
            chi_square_2x2::<f64>(11, 10, 5, 10),
            Err(StatsError::BadCounts { .. })
        ));
        assert!(matches!(
            chi_square_2x2::<f64>(0, 0, 5, 10),
            Err(StatsError::ZeroN)
        ));
    }

    #[test]
    fn small_counts_stay_finite_under_correction() {
        // Correction clamps at zero when the cross term is below N/2.
        let (chi, p) = chi_square_2x2::<f64>(1, 3, 1, 3).unwrap();
        assert_eq!((chi, p), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn invariant_under_group_swap(
            s1 in 0u64..200, n1 in 1u64..200,
            s2 in 0u64..200, n2 in 1u64..200,
        ) {
            let (s1, s2) = (s1.min(n1), s2.min(n2));
            let (a, pa) = chi_square_2x2::<f64>(s1, n1, s2, n2).unwrap();
            let (b, pb) = chi_square_2x2::<f64>(s2, n2, s1, n1).unwrap();
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
            prop_assert!((pa - pb).abs() < 1e-10);
        }

        #[test]
        fn invariant_under_success_failure_swap(
            s1 in 0u64..200, n1 in 1u64..200,
            s2 in 0u64..200, n2 in 1u64..200,
        ) {
            let (s1, s2) = (s1.min(n1), s2.min(n2));
            for f in [chi_square_2x2::<f64>, chi_square_2x2_uncorrected::<f64>] {
                let (a, pa) = f(s1, n1, s2, n2).unwrap();
                let (b, pb) = f(n1 - s1, n1, n2 - s2, n2).unwrap();
                prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
                prop_assert!((pa - pb).abs() < 1e-10);
            }
        }

        #[test]
        fn correction_never_increases_statistic(
            s1 in 0u64..200, n1 in 1u64..200,
            s2 in 0u64..200, n2 in 1u64..200,
        ) {
            let (s1, s2) = (s1.min(n1), s2.min(n2));
            let (corrected, _) = chi_square_2x2::<f64>(s1, n1, s2, n2).unwrap();
            let (plain, _) = chi_square_2x2_uncorrected::<f64>(s1, n1, s2, n2).unwrap();
            prop_assert!(corrected <= plain + 1e-12);
        }
    }
}
