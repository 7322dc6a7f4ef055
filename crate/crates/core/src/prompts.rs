//! Phase prompt rendering.
//!
//! The four phase templates ship as resource files and are rendered with
//! single-pass placeholder substitution: the template is scanned once and
//! substituted data is never rescanned, so reviews containing literal
//! placeholder tokens pass through as data. Golden tests pin the rendered
//! bytes; `template_version` fingerprints the resources into the run
//! manifest so journals can never silently mix prompt revisions.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Review;
use crate::Rating;

pub const TEMPLATE_PHASE1: &str = include_str!("../resources/templates/phase1.txt");
pub const TEMPLATE_PHASE2_STATUS: &str = include_str!("../resources/templates/phase2_status.txt");
pub const TEMPLATE_PHASE2_NONE: &str = include_str!("../resources/templates/phase2_none.txt");
pub const TEMPLATE_PHASE3: &str = include_str!("../resources/templates/phase3.txt");
pub const TEMPLATE_PHASE4: &str = include_str!("../resources/templates/phase4.txt");

/// Fingerprint of the shipped template bytes.
pub fn template_version() -> String {
    let mut hasher = Sha256::new();
    for t in [
        TEMPLATE_PHASE1,
        TEMPLATE_PHASE2_STATUS,
        TEMPLATE_PHASE2_NONE,
        TEMPLATE_PHASE3,
        TEMPLATE_PHASE4,
    ] {
        hasher.update((t.len() as u64).to_le_bytes());
        hasher.update(t.as_bytes());
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    P1,
    P2,
    P3,
    P4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePrompt {
    pub phase: Phase,
    pub text: String,
    pub placeholders_resolved: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("review text is empty after trimming")]
    EmptyReview,
    #[error("rating {value} outside [0, 1]")]
    RatingOutOfRange { value: f64 },
    #[error("profile with role {role:?} is missing credential field {field:?}")]
    MissingCredential { role: Status, field: &'static str },
    #[error("profile with role None must not carry credential field {field:?}")]
    UnexpectedCredential { field: &'static str },
    #[error("profile under library key {key:?} has role {role:?}")]
    RoleMismatch { key: &'static str, role: Status },
}

/// Status level assigned to an agent slot in a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    High,
    Moderate,
    Low,
    None,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::High => "high",
            Status::Moderate => "moderate",
            Status::Low => "low",
            Status::None => "none",
        };
        f.write_str(s)
    }
}

/// Credential and role framing injected into a partner introduction.
///
/// Role `None` must carry no credentials; any other role requires all six
/// credential fields. `hierarchy_clause`, when present, is appended after
/// the introduction template as its own paragraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusProfile {
    pub role_frame: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub education: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experience: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achievement: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub institution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expertise: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy_clause: Option<String>,
}

impl StatusProfile {
    pub fn none() -> Self {
        StatusProfile {
            role_frame: Status::None,
            gender: None,
            education: None,
            experience: None,
            achievement: None,
            institution: None,
            expertise: None,
            hierarchy_clause: None,
        }
    }

    fn credential_fields(&self) -> [(&'static str, &Option<String>); 6] {
        [
            ("gender", &self.gender),
            ("education", &self.education),
            ("experience", &self.experience),
            ("achievement", &self.achievement),
            ("institution", &self.institution),
            ("expertise", &self.expertise),
        ]
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.role_frame == Status::None {
            for (field, value) in self.credential_fields() {
                if value.is_some() {
                    return Err(PromptError::UnexpectedCredential { field });
                }
            }
            if self.hierarchy_clause.is_some() {
                return Err(PromptError::UnexpectedCredential {
                    field: "hierarchy_clause",
                });
            }
            return Ok(());
        }
        for (field, value) in self.credential_fields() {
            match value {
                Some(v) if !v.trim().is_empty() => {}
                _ => {
                    return Err(PromptError::MissingCredential {
                        role: self.role_frame,
                        field,
                    })
                }
            }
        }
        Ok(())
    }
}

/// The three credentialed profiles a run draws from.
///
/// The shipped defaults are editorial reconstructions of the role framings
/// the experiment design calls for (senior expert with a precedence clause,
/// junior trainee, equal standing); the exact manipulation wording is
/// expected to be overridden per study via the profile library file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileLibrary {
    pub high: StatusProfile,
    pub moderate: StatusProfile,
    pub low: StatusProfile,
}

impl Default for ProfileLibrary {
    fn default() -> Self {
        let profile = |role_frame: Status,
                       education: &str,
                       experience: &str,
                       achievement: &str,
                       institution: &str,
                       expertise: &str,
                       hierarchy_clause: &str| StatusProfile {
            role_frame,
            gender: Some("a colleague".into()),
            education: Some(education.into()),
            experience: Some(experience.into()),
            achievement: Some(achievement.into()),
            institution: Some(institution.into()),
            expertise: Some(expertise.into()),
            hierarchy_clause: Some(hierarchy_clause.into()),
        };
        ProfileLibrary {
            high: profile(
                Status::High,
                "PhD in Computational Linguistics",
                "18 years of professional experience in sentiment analysis",
                "widely recognized for foundational work on text evaluation methodology",
                "a leading research university",
                "sentiment analysis of informal text, including movie reviews",
                "Your partner is the senior expert and team leader for this task. \
                 In cases of disagreement, your partner's judgment takes precedence.",
            ),
            moderate: profile(
                Status::Moderate,
                "a degree in linguistics",
                "several years of experience with text annotation",
                "a solid record of reliable annotation work",
                "a mid-sized university",
                "general text annotation, including sentiment rating",
                "You and your partner hold equal standing on this task. \
                 Neither of your judgments takes precedence over the other.",
            ),
            low: profile(
                Status::Low,
                "currently completing an undergraduate degree",
                "three months of experience as a junior trainee annotator",
                "recently finished an introductory annotation course",
                "a small local college",
                "still learning the basics of sentiment annotation",
                "Your partner is the junior trainee on this task. \
                 In cases of disagreement, your judgment takes precedence.",
            ),
        }
    }
}

impl ProfileLibrary {
    /// Profile for a partner of the given status; `None` status means the
    /// no-status introduction.
    pub fn resolve(&self, status: Status) -> Option<&StatusProfile> {
        match status {
            Status::High => Some(&self.high),
            Status::Moderate => Some(&self.moderate),
            Status::Low => Some(&self.low),
            Status::None => None,
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        for (key, profile, want) in [
            ("high", &self.high, Status::High),
            ("moderate", &self.moderate, Status::Moderate),
            ("low", &self.low, Status::Low),
        ] {
            if profile.role_frame != want {
                return Err(PromptError::RoleMismatch {
                    key,
                    role: profile.role_frame,
                });
            }
            profile.validate()?;
        }
        Ok(())
    }
}

/// Replace placeholders in one left-to-right pass over the template.
/// Substituted values are never rescanned.
fn substitute(template: &str, map: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    loop {
        let next = map
            .iter()
            .filter_map(|(k, v)| rest.find(k).map(|i| (i, *k, *v)))
            .min_by_key(|&(i, _, _)| i);
        match next {
            Some((i, key, value)) => {
                out.push_str(&rest[..i]);
                out.push_str(value);
                rest = &rest[i + key.len()..];
            }
            None => {
                out.push_str(rest);
                return out;
            }
        }
    }
}

/// Canonical decimal rendering of a rating: shortest form that round-trips,
/// no sign, no exponent, no trailing zeros ("0.73", "0.5", "1", "0").
pub fn render_rating(value: Rating) -> String {
    format!("{value}")
}

pub fn render_phase1(review: &Review) -> Result<PhasePrompt, PromptError> {
    if review.text.trim().is_empty() {
        return Err(PromptError::EmptyReview);
    }
    Ok(PhasePrompt {
        phase: Phase::P1,
        text: substitute(TEMPLATE_PHASE1, &[("[REVIEW_TEXT]", &review.text)]),
        placeholders_resolved: true,
    })
}

/// Introduce the partner. A credentialed profile renders the status
/// template (plus the hierarchy clause when present); no partner profile
/// or a role-`None` profile renders the no-status template verbatim.
pub fn render_phase2(partner: Option<&StatusProfile>) -> Result<PhasePrompt, PromptError> {
    let profile = match partner {
        Some(p) if p.role_frame != Status::None => p,
        _ => {
            return Ok(PhasePrompt {
                phase: Phase::P2,
                text: TEMPLATE_PHASE2_NONE.to_string(),
                placeholders_resolved: true,
            })
        }
    };
    profile.validate()?;
    let unwrap = |v: &Option<String>| v.clone().expect("validated above");
    let mut text = substitute(
        TEMPLATE_PHASE2_STATUS,
        &[
            ("[GENDER]", &unwrap(&profile.gender)),
            ("[EDUCATION]", &unwrap(&profile.education)),
            ("[EXPERIENCE]", &unwrap(&profile.experience)),
            ("[ACHIEVEMENT]", &unwrap(&profile.achievement)),
            ("[INSTITUTION]", &unwrap(&profile.institution)),
            ("[EXPERTISE]", &unwrap(&profile.expertise)),
        ],
    );
    if let Some(clause) = &profile.hierarchy_clause {
        text.push_str("\n\n");
        text.push_str(clause);
    }
    Ok(PhasePrompt {
        phase: Phase::P2,
        text,
        placeholders_resolved: true,
    })
}

pub fn render_phase3(own: Rating, partner: Rating) -> Result<PhasePrompt, PromptError> {
    for value in [own, partner] {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(PromptError::RatingOutOfRange { value });
        }
    }
    Ok(PhasePrompt {
        phase: Phase::P3,
        text: substitute(
            TEMPLATE_PHASE3,
            &[
                ("[OWN_RATING]", &render_rating(own)),
                ("[PARTNER_RATING]", &render_rating(partner)),
            ],
        ),
        placeholders_resolved: true,
    })
}

pub fn render_phase4() -> PhasePrompt {
    PhasePrompt {
        phase: Phase::P4,
        text: TEMPLATE_PHASE4.to_string(),
        placeholders_resolved: true,
    }
}

/// Identify which phase a delivered prompt belongs to. Used by the
/// simulated backend, which sees only the conversation.
pub fn phase_of(prompt: &str) -> Option<Phase> {
    const P1_PREFIX: &str = "Read the following movie review";
    const P2_PREFIX: &str = "You are now being paired with a partner";
    const P3_PREFIX: &str = "Your rating: ";
    const P4_PREFIX: &str = "You will now make your final rating.";
    if prompt.starts_with(P1_PREFIX) {
        Some(Phase::P1)
    } else if prompt.starts_with(P2_PREFIX) {
        Some(Phase::P2)
    } else if prompt.starts_with(P3_PREFIX) {
        Some(Phase::P3)
    } else if prompt.starts_with(P4_PREFIX) {
        Some(Phase::P4)
    } else {
        None
    }
}
