//! Four-phase trial state machine and experiment orchestration.
//!
//! One trial = two agents, one review, four phases: independent
//! ratings, partner introduction with (or without) status credentials,
//! rating revelation, and final ratings under a collective-orientation
//! framing. An experiment is a seeded grid of trials over conditions,
//! journaled as it runs and resumable after interruption.

mod condition;
mod journal;
mod record;
mod runner;

pub use condition::{Condition, ConditionId, Pairing};
pub use journal::{
    journal_path, manifest_path, read_journal, read_manifest, write_manifest, JournalRead,
    JournalWriter, RunManifest, JOURNAL_FILE, MANIFEST_FILE,
};
pub use record::{trial_id, TrialRecord, TrialStatus};
pub use runner::{
    load_run, resume_experiment, run_experiment, run_trial, BackendPairs, DifferentPair,
    RunConfig, RunLog, TrialContext,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("configuration invalid: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Agent(#[from] crate::agents::AgentError),
    #[error(transparent)]
    Prompt(#[from] crate::prompts::PromptError),
    #[error("a journal already exists at {path}; resume the run instead of starting over")]
    JournalExists { path: PathBuf },
    #[error("no journal found at {path}")]
    JournalMissing { path: PathBuf },
    #[error("manifest at {path} does not match this configuration: {detail}")]
    ManifestMismatch { path: PathBuf, detail: String },
    #[error("could not parse manifest at {path}: {detail}")]
    ManifestUnreadable { path: PathBuf, detail: String },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
