//! Deference classification and per-run rate estimates.
//!
//! A trial contributes one flag per agent slot. The primary denominator is
//! all Complete trials, with no-disagreement trials counted as
//! non-deference; a secondary rate conditioned on disagreement is reported
//! alongside because the two can differ when many pairs start out agreeing.

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_asymmetry_flags, AsymmetryEstimate};
use super::num::Real;
use super::proportions::{proportion_estimate, ProportionEstimate};
use super::StatsError;
use crate::protocol::{TrialRecord, TrialStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeferenceClass {
    Deferred,
    MovedAway,
    Unchanged,
    NoDisagreement,
}

/// Agent slot within a trial. M1 is the first-listed backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    M1,
    M2,
}

/// Classify one agent's revision.
///
/// No disagreement when the initial gap is within `threshold`; otherwise
/// unchanged when the revision is within `threshold`; otherwise deferred
/// exactly when the revision moved toward the partner's initial rating
/// (overshooting the partner still counts as toward).
pub fn classify_deference<F: Real>(
    initial_own: F,
    initial_partner: F,
    final_own: F,
    threshold: F,
) -> Result<DeferenceClass, StatsError> {
    for v in [initial_own, initial_partner, final_own] {
        if !(F::zero()..=F::one()).contains(&v) || !v.is_finite() {
            return Err(StatsError::RatingOutOfRange {
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    if !(threshold > F::zero()) {
        return Err(StatsError::BadThreshold {
            value: threshold.to_f64().unwrap_or(f64::NAN),
        });
    }

    if (initial_own - initial_partner).abs() <= threshold {
        return Ok(DeferenceClass::NoDisagreement);
    }
    let change = final_own - initial_own;
    if change.abs() <= threshold {
        return Ok(DeferenceClass::Unchanged);
    }
    let toward_partner = initial_partner - initial_own;
    if change * toward_partner > F::zero() {
        Ok(DeferenceClass::Deferred)
    } else {
        Ok(DeferenceClass::MovedAway)
    }
}

/// Both slots' classifications reduced to analysis flags. Disagreement is
/// symmetric, so one flag covers both slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialFlags {
    pub m1_deferred: bool,
    pub m2_deferred: bool,
    pub disagreed: bool,
}

/// Flags for one Complete trial.
pub fn trial_flags(record: &TrialRecord, threshold: f64) -> Result<TrialFlags, StatsError> {
    if !matches!(record.status, TrialStatus::Complete) {
        return Err(StatsError::NotComplete {
            trial_id: record.trial_id.clone(),
        });
    }
    let missing = || StatsError::MissingRating {
        trial_id: record.trial_id.clone(),
    };
    let m1_initial = record.m1_initial.ok_or_else(missing)?;
    let m2_initial = record.m2_initial.ok_or_else(missing)?;
    let m1_final = record.m1_final.ok_or_else(missing)?;
    let m2_final = record.m2_final.ok_or_else(missing)?;

    let m1 = classify_deference(m1_initial, m2_initial, m1_final, threshold)?;
    let m2 = classify_deference(m2_initial, m1_initial, m2_final, threshold)?;
    Ok(TrialFlags {
        m1_deferred: m1 == DeferenceClass::Deferred,
        m2_deferred: m2 == DeferenceClass::Deferred,
        disagreed: m1 != DeferenceClass::NoDisagreement,
    })
}

/// Flags for a set of Complete trials; any non-Complete record is a
/// caller error.
pub fn deference_flags(
    records: &[&TrialRecord],
    threshold: f64,
) -> Result<Vec<TrialFlags>, StatsError> {
    records.iter().map(|r| trial_flags(r, threshold)).collect()
}

fn slot_count(flags: &[TrialFlags], slot: Slot) -> u64 {
    flags
        .iter()
        .filter(|f| match slot {
            Slot::M1 => f.m1_deferred,
            Slot::M2 => f.m2_deferred,
        })
        .count() as u64
}

/// Deference rate over all Complete trials, with Wilson interval.
pub fn deference_rate(
    records: &[&TrialRecord],
    slot: Slot,
    threshold: f64,
    confidence: f64,
) -> Result<ProportionEstimate<f64>, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty {
            context: "deference rate over zero trials",
        });
    }
    let flags = deference_flags(records, threshold)?;
    proportion_estimate(slot_count(&flags, slot), flags.len() as u64, confidence)
}

/// Deference rate conditioned on initial disagreement. `None` when every
/// pair started out agreeing.
pub fn disagreement_deference_rate(
    records: &[&TrialRecord],
    slot: Slot,
    threshold: f64,
    confidence: f64,
) -> Result<Option<ProportionEstimate<f64>>, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty {
            context: "deference rate over zero trials",
        });
    }
    let flags = deference_flags(records, threshold)?;
    let n = flags.iter().filter(|f| f.disagreed).count() as u64;
    if n == 0 {
        return Ok(None);
    }
    // Deferred implies disagreed, so the slot count needs no refilter.
    Ok(Some(proportion_estimate(
        slot_count(&flags, slot),
        n,
        confidence,
    )?))
}

/// M2's rate minus M1's over the all-Complete denominator.
pub fn asymmetry(records: &[&TrialRecord], threshold: f64) -> Result<f64, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty {
            context: "asymmetry over zero trials",
        });
    }
    let flags = deference_flags(records, threshold)?;
    let n = flags.len() as f64;
    Ok((slot_count(&flags, Slot::M2) as f64 - slot_count(&flags, Slot::M1) as f64) / n)
}

/// Percentile bootstrap of the asymmetry, resampling whole trials.
pub fn bootstrap_asymmetry(
    records: &[&TrialRecord],
    threshold: f64,
    iterations: usize,
    confidence: f64,
    seed: u64,
) -> Result<AsymmetryEstimate<f64>, StatsError> {
    let flags = deference_flags(records, threshold)?;
    let pairs: Vec<(bool, bool)> = flags
        .iter()
        .map(|f| (f.m1_deferred, f.m2_deferred))
        .collect();
    bootstrap_asymmetry_flags(&pairs, iterations, confidence, seed)
}
