//! The journaled unit of work: one four-phase trial.

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::ConditionId;
use crate::agents::Conversation;
use crate::corpus::Sentiment;
use crate::Rating;

/// Terminal state of a trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum TrialStatus {
    Complete,
    Failed { reason: String },
}

/// One complete four-phase interaction, as written to the journal.
///
/// Rating fields are optional because a failed trial keeps whatever was
/// parsed before the failure; a `Complete` record always carries all
/// four (see [`TrialRecord::complete_ratings`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    /// `"{condition}:{index:05}"` — unique within a run.
    pub trial_id: String,
    pub condition: ConditionId,
    pub trial_index: u32,
    pub review_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_label: Option<Sentiment>,
    /// The trial seed every per-slot draw derives from.
    pub seed: u64,
    pub m1_backend: String,
    pub m2_backend: String,
    pub m1_initial: Option<Rating>,
    pub m2_initial: Option<Rating>,
    pub m1_final: Option<Rating>,
    pub m2_final: Option<Rating>,
    pub m1_transcript: Conversation,
    pub m2_transcript: Conversation,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub status: TrialStatus,
}

pub fn trial_id(condition: ConditionId, index: u32) -> String {
    format!("{condition}:{index:05}")
}

impl TrialRecord {
    pub fn is_complete(&self) -> bool {
        matches!(self.status, TrialStatus::Complete)
    }

    /// All four ratings of a `Complete` record, or `None` for failed or
    /// partially recorded trials.
    pub fn complete_ratings(&self) -> Option<(Rating, Rating, Rating, Rating)> {
        if !self.is_complete() {
            return None;
        }
        Some((
            self.m1_initial?,
            self.m2_initial?,
            self.m1_final?,
            self.m2_final?,
        ))
    }

    /// A minimal `Complete` record for statistics tests: fixed epoch
    /// timestamps, empty transcripts, ratings as given.
    pub fn synthetic(
        condition: ConditionId,
        index: u32,
        m1_initial: Rating,
        m2_initial: Rating,
        m1_final: Rating,
        m2_final: Rating,
    ) -> TrialRecord {
        let epoch = Utc.timestamp_opt(0, 0).unwrap();
        TrialRecord {
            trial_id: trial_id(condition, index),
            condition,
            trial_index: index,
            review_id: format!("synthetic-{index:05}"),
            review_label: None,
            seed: 0,
            m1_backend: "synthetic".into(),
            m2_backend: "synthetic".into(),
            m1_initial: Some(m1_initial),
            m2_initial: Some(m2_initial),
            m1_final: Some(m1_final),
            m2_final: Some(m2_final),
            m1_transcript: Conversation::new(),
            m2_transcript: Conversation::new(),
            started_at: epoch,
            finished_at: epoch,
            status: TrialStatus::Complete,
        }
    }
}
