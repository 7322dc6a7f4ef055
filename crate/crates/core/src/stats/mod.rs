//! Deference statistics: classification, interval estimates, planned
//! contrasts, and the numeric kernel behind them.

pub mod bootstrap;
pub mod chi2;
pub mod contrasts;
pub mod deference;
pub mod effect;
pub mod holm;
pub mod num;
pub mod proportions;

pub use bootstrap::{bootstrap_asymmetry_flags, AsymmetryEstimate};
pub use chi2::{chi_square_2x2, chi_square_2x2_uncorrected};
pub use contrasts::{planned_contrasts, ConditionCounts, ContrastName, ContrastResult};
pub use deference::{
    asymmetry, bootstrap_asymmetry, classify_deference, deference_flags, deference_rate,
    disagreement_deference_rate, trial_flags, DeferenceClass, Slot, TrialFlags,
};
pub use effect::{cohens_h, power_sample_size};
pub use holm::holm_bonferroni;
pub use num::Real;
pub use proportions::{proportion_estimate, wilson_ci, ProportionEstimate};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty input: {context}")]
    Empty { context: &'static str },
    #[error("rating {value} outside [0, 1]")]
    RatingOutOfRange { value: f64 },
    #[error("threshold must be positive, got {value}")]
    BadThreshold { value: f64 },
    #[error("confidence must lie in (0, 1), got {value}")]
    BadConfidence { value: f64 },
    #[error("inconsistent counts: successes {successes} exceed n {n}")]
    BadCounts { successes: u64, n: u64 },
    #[error("n must be at least 1")]
    ZeroN,
    #[error("p-value {value} outside (0, 1]")]
    BadPValue { value: f64 },
    #[error("effect size must be nonzero and finite, got {value}")]
    BadEffect { value: f64 },
    #[error("alpha and power must lie in (0, 1), got alpha {alpha}, power {power}")]
    BadPowerInputs { alpha: f64, power: f64 },
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("trial {trial_id} is not Complete")]
    NotComplete { trial_id: String },
    #[error("trial {trial_id} is Complete but missing a rating")]
    MissingRating { trial_id: String },
    #[error("planned contrasts need condition {condition}")]
    MissingCondition { condition: String },
}
