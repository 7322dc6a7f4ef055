//! Deterministic simulated agent.
//!
//! The simulated backend is the desk-scale oracle for the whole pipeline:
//! its initial rating is a seeded jitter around a configured center, and
//! its final rating moves a fixed fraction of the gap toward the partner
//! with a seeded Bernoulli draw. Every draw derives from the trial's slot
//! seed, so identical configurations replay identical transcripts.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AgentError;
use crate::corpus::Review;
use crate::prompts::{phase_of, render_rating, Phase};
use crate::seeds::{derive_seed, rng_from_seed};
use crate::Rating;

#[derive(Debug, Clone, Copy, Error, PartialEq)]
pub enum PolicyError {
    #[error("initial_center {0} outside [0, 1]")]
    CenterOutOfRange(f64),
    #[error("initial_jitter {0} must be finite and nonnegative")]
    JitterInvalid(f64),
    #[error("defer_prob {0} outside [0, 1]")]
    ProbOutOfRange(f64),
    #[error("defer_step {0} outside (0, 1]")]
    StepOutOfRange(f64),
    #[error(
        "defer_step {step} too small: a step below 0.5 applied to a gap \
         just over the 0.02 disagreement floor moves less than the 0.01 \
         change threshold, making deference undetectable"
    )]
    StepBelowDetectable { step: f64 },
}

/// How a simulated agent rates and revises.
///
/// Construction enforces that a deference move always crosses the change
/// threshold: for any disagreement gap > 0.02, `defer_step · gap > 0.01`,
/// which pins `defer_step` to `[0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyConfig")]
pub struct DeferencePolicy {
    initial_center: f64,
    initial_jitter: f64,
    defer_prob: f64,
    defer_step: f64,
}

/// Raw wire form; validated into [`DeferencePolicy`].
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyConfig {
    initial_center: f64,
    #[serde(default)]
    initial_jitter: f64,
    defer_prob: f64,
    defer_step: f64,
}

impl TryFrom<PolicyConfig> for DeferencePolicy {
    type Error = PolicyError;

    fn try_from(raw: PolicyConfig) -> Result<Self, PolicyError> {
        DeferencePolicy::new(
            raw.initial_center,
            raw.initial_jitter,
            raw.defer_prob,
            raw.defer_step,
        )
    }
}

impl DeferencePolicy {
    pub fn new(
        initial_center: f64,
        initial_jitter: f64,
        defer_prob: f64,
        defer_step: f64,
    ) -> Result<Self, PolicyError> {
        if !(0.0..=1.0).contains(&initial_center) || !initial_center.is_finite() {
            return Err(PolicyError::CenterOutOfRange(initial_center));
        }
        if !initial_jitter.is_finite() || initial_jitter < 0.0 {
            return Err(PolicyError::JitterInvalid(initial_jitter));
        }
        if !(0.0..=1.0).contains(&defer_prob) || !defer_prob.is_finite() {
            return Err(PolicyError::ProbOutOfRange(defer_prob));
        }
        if !(defer_step > 0.0 && defer_step <= 1.0) {
            return Err(PolicyError::StepOutOfRange(defer_step));
        }
        if defer_step < 0.5 {
            return Err(PolicyError::StepBelowDetectable { step: defer_step });
        }
        Ok(DeferencePolicy {
            initial_center,
            initial_jitter,
            defer_prob,
            defer_step,
        })
    }

    pub fn initial_center(&self) -> f64 {
        self.initial_center
    }

    pub fn initial_jitter(&self) -> f64 {
        self.initial_jitter
    }

    pub fn defer_prob(&self) -> f64 {
        self.defer_prob
    }

    pub fn defer_step(&self) -> f64 {
        self.defer_step
    }
}

fn initial_by_id(policy: &DeferencePolicy, review_id: &str, seed: u64) -> Rating {
    let mut rng = rng_from_seed(derive_seed(&[
        b"initial",
        review_id.as_bytes(),
        &seed.to_le_bytes(),
    ]));
    let offset = (2.0 * rng.gen::<f64>() - 1.0) * policy.initial_jitter;
    (policy.initial_center + offset).clamp(0.0, 1.0)
}

/// Seeded initial rating: center plus uniform jitter over
/// `[-initial_jitter, initial_jitter]`, clamped to `[0, 1]`.
pub fn simulated_initial(policy: &DeferencePolicy, review: &Review, seed: u64) -> Rating {
    initial_by_id(policy, &review.id, seed)
}

/// Seeded final rating: with probability `defer_prob`, move `defer_step`
/// of the way toward the partner; otherwise keep the own rating.
pub fn simulated_final(
    policy: &DeferencePolicy,
    own: Rating,
    partner: Rating,
    seed: u64,
) -> Rating {
    let mut rng = rng_from_seed(derive_seed(&[b"final", &seed.to_le_bytes()]));
    if rng.gen::<f64>() < policy.defer_prob {
        (own + policy.defer_step * (partner - own)).clamp(0.0, 1.0)
    } else {
        own
    }
}

/// A simulated agent bound to one trial (review identity and slot seed).
#[derive(Debug, Clone)]
pub struct SimulatedAgent {
    policy: DeferencePolicy,
    review_id: String,
    seed: u64,
}

impl SimulatedAgent {
    pub fn for_trial(policy: DeferencePolicy, review: &Review, seed: u64) -> Self {
        SimulatedAgent {
            policy,
            review_id: review.id.clone(),
            seed,
        }
    }

    /// Reply to the most recent prompt. The agent recognizes the phase
    /// from the delivered text alone, like a remote model would.
    pub fn complete(&self, last_user: &str, revelation: Option<&str>) -> Result<String, AgentError> {
        match phase_of(last_user) {
            Some(Phase::P1) => Ok(render_rating(initial_by_id(
                &self.policy,
                &self.review_id,
                self.seed,
            ))),
            Some(Phase::P2) => Ok("Acknowledged.".to_string()),
            Some(Phase::P4) => {
                let context = revelation.ok_or_else(|| {
                    AgentError::Protocol(
                        "final-rating prompt arrived without a rating revelation".into(),
                    )
                })?;
                let (own, partner) = parse_revelation(context)?;
                Ok(render_rating(simulated_final(
                    &self.policy,
                    own,
                    partner,
                    self.seed,
                )))
            }
            Some(Phase::P3) => Err(AgentError::Protocol(
                "rating revelation expects no reply".into(),
            )),
            None => Err(AgentError::Protocol(format!(
                "unrecognized prompt: {:?}",
                last_user.chars().take(40).collect::<String>()
            ))),
        }
    }
}

/// Read the two ratings back out of a rendered revelation message.
fn parse_revelation(text: &str) -> Result<(Rating, Rating), AgentError> {
    let mut lines = text.lines();
    let own = lines
        .next()
        .and_then(|l| l.strip_prefix("Your rating: "))
        .and_then(|v| v.parse::<f64>().ok());
    let partner = lines
        .next()
        .and_then(|l| l.strip_prefix("Your partner's rating: "))
        .and_then(|v| v.parse::<f64>().ok());
    match (own, partner) {
        (Some(o), Some(p)) => Ok((o, p)),
        _ => Err(AgentError::Protocol(format!(
            "malformed rating revelation: {:?}",
            text.lines().next().unwrap_or_default()
        ))),
    }
}
