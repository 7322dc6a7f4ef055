//! Durable run state: the manifest and the append-only JSONL journal.
//!
//! The manifest is written before any trial runs and freezes everything
//! a resume must agree on: config digest, corpus digest, seed, and the
//! template version. The journal gets one record per line, flushed after
//! every append, so a killed run loses at most the in-flight trial.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ConditionId, ProtocolError, TrialRecord};

pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything a resume must match, written once at run start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Digest of the data-affecting config fields (see `RunConfig::digest`).
    pub config_digest: String,
    /// SHA-256 of the corpus file bytes.
    pub corpus_digest: String,
    pub corpus_source: String,
    pub run_seed: u64,
    /// Digest of the five prompt templates compiled into this binary.
    pub template_version: String,
    pub conditions: Vec<ConditionId>,
    pub trials_per_condition: u32,
    pub harness_version: String,
    pub created_at: DateTime<Utc>,
}

pub fn journal_path(output_dir: &Path) -> PathBuf {
    output_dir.join(JOURNAL_FILE)
}

pub fn manifest_path(output_dir: &Path) -> PathBuf {
    output_dir.join(MANIFEST_FILE)
}

fn io_err(path: &Path, source: std::io::Error) -> ProtocolError {
    ProtocolError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_manifest(output_dir: &Path, manifest: &RunManifest) -> Result<(), ProtocolError> {
    std::fs::create_dir_all(output_dir).map_err(|e| io_err(output_dir, e))?;
    let path = manifest_path(output_dir);
    let mut body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    body.push('\n');
    std::fs::write(&path, body).map_err(|e| io_err(&path, e))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, ProtocolError> {
    let raw = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&raw).map_err(|e| ProtocolError::ManifestUnreadable {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Single-writer handle to the journal; appends flush line by line.
#[derive(Debug)]
pub struct JournalWriter {
    path: PathBuf,
    file: File,
}

impl JournalWriter {
    /// Creates a fresh journal. Fails if one already exists — callers
    /// must resume instead of silently mixing runs.
    pub fn create(output_dir: &Path) -> Result<Self, ProtocolError> {
        let path = journal_path(output_dir);
        if path.exists() {
            return Err(ProtocolError::JournalExists { path });
        }
        std::fs::create_dir_all(output_dir).map_err(|e| io_err(output_dir, e))?;
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        Ok(JournalWriter { path, file })
    }

    /// Opens an existing journal for appending.
    pub fn append_to(output_dir: &Path) -> Result<Self, ProtocolError> {
        let path = journal_path(output_dir);
        if !path.exists() {
            return Err(ProtocolError::JournalMissing { path });
        }
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        Ok(JournalWriter { path, file })
    }

    pub fn append(&mut self, record: &TrialRecord) -> Result<(), ProtocolError> {
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|()| self.file.flush())
            .map_err(|e| io_err(&self.path, e))
    }
}

/// Journal contents plus any lines that failed to parse.
#[derive(Debug, Default)]
pub struct JournalRead {
    pub records: Vec<TrialRecord>,
    /// `(1-based line number, parse error)` for skipped lines.
    pub skipped: Vec<(u64, String)>,
}

/// Reads every parseable record, in file order. Corrupt lines — most
/// commonly a truncated final line after a kill — are skipped and
/// reported, not fatal. Duplicate trial_ids keep the first occurrence.
pub fn read_journal(path: &Path) -> Result<JournalRead, ProtocolError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut out = JournalRead::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let number = idx as u64 + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRecord>(&line) {
            Ok(record) => {
                if seen.insert(record.trial_id.clone()) {
                    out.records.push(record);
                } else {
                    log::warn!(
                        "journal line {number}: duplicate trial_id {}; keeping the first",
                        record.trial_id
                    );
                    out.skipped.push((number, "duplicate trial_id".into()));
                }
            }
            Err(e) => {
                log::warn!("journal line {number}: skipping unparseable record: {e}");
                out.skipped.push((number, e.to_string()));
            }
        }
    }
    Ok(out)
}
