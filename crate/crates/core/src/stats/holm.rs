//! Holm-Bonferroni step-down correction.

use super::num::Real;
use super::StatsError;

/// Correct a family of p-values, preserving input order in the output.
///
/// Sort ascending; the i-th sorted value is scaled by (m − i), a running
/// maximum enforces monotonicity, and everything caps at 1.
pub fn holm_bonferroni<F: Real>(p_values: &[F]) -> Result<Vec<F>, StatsError> {
    for &p in p_values {
        if !(p > F::zero() && p <= F::one()) {
            return Err(StatsError::BadPValue {
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].partial_cmp(&p_values[j]).expect("no NaN here"));

    let mut corrected = vec![F::zero(); m];
    let mut running = F::zero();
    for (rank, &idx) in order.iter().enumerate() {
        let scaled = F::c((m - rank) as f64) * p_values[idx];
        running = running.max(scaled);
        corrected[idx] = running.min(F::one());
    }
    Ok(corrected)
}
