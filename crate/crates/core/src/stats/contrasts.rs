//! The four planned contrasts over M2 deference rates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chi2::chi_square_2x2;
use super::effect::cohens_h;
use super::holm::holm_bonferroni;
use super::num::Real;
use super::StatsError;
use crate::protocol::ConditionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastName {
    PureStatus,
    PureCapability,
    StatusEnhancement,
    StatusReversal,
}

impl ContrastName {
    pub const ALL: [ContrastName; 4] = [
        ContrastName::PureStatus,
        ContrastName::PureCapability,
        ContrastName::StatusEnhancement,
        ContrastName::StatusReversal,
    ];

    /// The two conditions compared, in (rate1, rate2) order.
    pub fn conditions(self) -> (ConditionId, ConditionId) {
        match self {
            ContrastName::PureStatus => (ConditionId::SameStandard, ConditionId::SameEqual),
            ContrastName::PureCapability => (ConditionId::DifferentEqual, ConditionId::SameEqual),
            ContrastName::StatusEnhancement => {
                (ConditionId::DifferentStandard, ConditionId::DifferentEqual)
            }
            ContrastName::StatusReversal => {
                (ConditionId::DifferentReversed, ConditionId::DifferentStandard)
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ContrastName::PureStatus => "Pure status",
            ContrastName::PureCapability => "Pure capability",
            ContrastName::StatusEnhancement => "Status enhancement",
            ContrastName::StatusReversal => "Status reversal",
        }
    }
}

/// Per-condition M2 deference count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionCounts {
    pub m2_deferred: u64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult<F> {
    pub name: ContrastName,
    pub condition1: ConditionId,
    pub condition2: ConditionId,
    pub rate1: F,
    pub rate2: F,
    pub diff: F,
    pub chi2: F,
    pub p_raw: F,
    pub p_corrected: F,
    pub h: F,
}

/// Run the four planned contrasts; Holm correction spans exactly these
/// four tests. All contrasts compare M2 deference rates.
pub fn planned_contrasts<F: Real>(
    counts: &BTreeMap<ConditionId, ConditionCounts>,
) -> Result<Vec<ContrastResult<F>>, StatsError> {
    // The contrast family is defined over the full six-cell design, so
    // demand all six even though one cell never enters a comparison.
    for id in ConditionId::ALL {
        if !counts.contains_key(&id) {
            return Err(StatsError::MissingCondition {
                condition: id.to_string(),
            });
        }
    }
    let lookup = |id: ConditionId| -> Result<ConditionCounts, StatsError> {
        counts
            .get(&id)
            .copied()
            .ok_or_else(|| StatsError::MissingCondition {
                condition: id.to_string(),
            })
    };

    let mut partial = Vec::with_capacity(4);
    for name in ContrastName::ALL {
        let (id1, id2) = name.conditions();
        let c1 = lookup(id1)?;
        let c2 = lookup(id2)?;
        if c1.n == 0 || c2.n == 0 {
            return Err(StatsError::ZeroN);
        }
        if c1.m2_deferred > c1.n {
            return Err(StatsError::BadCounts {
                successes: c1.m2_deferred,
                n: c1.n,
            });
        }
        if c2.m2_deferred > c2.n {
            return Err(StatsError::BadCounts {
                successes: c2.m2_deferred,
                n: c2.n,
            });
        }
        let rate1 = F::c(c1.m2_deferred as f64) / F::c(c1.n as f64);
        let rate2 = F::c(c2.m2_deferred as f64) / F::c(c2.n as f64);
        let (chi2, p_raw) = chi_square_2x2(c1.m2_deferred, c1.n, c2.m2_deferred, c2.n)?;
        let h = cohens_h(rate1, rate2)?;
        partial.push((name, id1, id2, rate1, rate2, chi2, p_raw, h));
    }

    let raw: Vec<F> = partial.iter().map(|p| p.6).collect();
    let corrected = holm_bonferroni(&raw)?;

    Ok(partial
        .into_iter()
        .zip(corrected)
        .map(
            |((name, condition1, condition2, rate1, rate2, chi2, p_raw, h), p_corrected)| {
                ContrastResult {
                    name,
                    condition1,
                    condition2,
                    rate1,
                    rate2,
                    diff: rate1 - rate2,
                    chi2,
                    p_raw,
                    p_corrected,
                    h,
                }
            },
        )
        .collect())
}
