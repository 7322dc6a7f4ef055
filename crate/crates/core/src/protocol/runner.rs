//! Trial execution and experiment orchestration.
//!
//! A trial walks both agents through the four phases: independent
//! initial ratings, partner introduction, rating revelation, and final
//! ratings. An experiment runs `trials_per_condition` trials per
//! requested condition over seeded review samples, journaling each
//! record before the next trial starts. Resume replays nothing: it
//! fills exactly the (condition, index) pairs missing from the journal.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use futures_util::future::join_all;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::journal::{
    journal_path, manifest_path, read_journal, read_manifest, write_manifest, JournalWriter,
    RunManifest,
};
use super::{Condition, ConditionId, Pairing, ProtocolError, TrialRecord, TrialStatus};
use crate::agents::{
    new_gate_map, parse_rating, Agent, BackendSpec, Conversation, GateMap, ParseMode,
};
use crate::corpus::{load_corpus, sample_reviews, Corpus, CorpusFormat, Review, Sentiment};
use crate::prompts::{
    render_phase1, render_phase2, render_phase3, render_phase4, template_version, ProfileLibrary,
};
use crate::seeds::{sample_seed, slot_seed, trial_seed};

/// Backend assignment for the two pairing kinds. In the
/// different-models pairing, `m1` is the first slot — the one the
/// standard conditions introduce as High.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendPairs {
    pub same_pair: BackendSpec,
    pub different_pair: DifferentPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentPair {
    pub m1: BackendSpec,
    pub m2: BackendSpec,
}

impl BackendPairs {
    pub fn for_pairing(&self, pairing: Pairing) -> (&BackendSpec, &BackendSpec) {
        match pairing {
            Pairing::SameModel => (&self.same_pair, &self.same_pair),
            Pairing::DifferentModels => (&self.different_pair.m1, &self.different_pair.m2),
        }
    }
}

/// Fully resolved run parameters (defaults already applied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub conditions: Vec<ConditionId>,
    pub trials_per_condition: u32,
    pub corpus_path: PathBuf,
    pub corpus_format: CorpusFormat,
    pub seed: u64,
    pub backends: BackendPairs,
    pub inter_trial_delay_seconds: f64,
    pub output_dir: PathBuf,
    pub parse_mode: ParseMode,
    /// Trials in flight at once; >1 is allowed only for all-simulated
    /// runs, where no endpoint needs pacing.
    pub parallelism: u32,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let invalid = |msg: String| ProtocolError::InvalidConfig(msg);
        if self.conditions.is_empty() {
            return Err(invalid("conditions must not be empty".into()));
        }
        let mut seen = HashSet::new();
        for id in &self.conditions {
            if !seen.insert(*id) {
                return Err(invalid(format!("condition {id} listed twice")));
            }
        }
        if self.trials_per_condition < 1 {
            return Err(invalid("trials_per_condition must be at least 1".into()));
        }
        if !self.inter_trial_delay_seconds.is_finite() || self.inter_trial_delay_seconds < 0.0 {
            return Err(invalid(format!(
                "inter_trial_delay_seconds must be finite and nonnegative, got {}",
                self.inter_trial_delay_seconds
            )));
        }
        if self.parallelism == 0 {
            return Err(invalid("parallelism must be at least 1".into()));
        }
        if self.parallelism > 1 && !self.all_simulated() {
            return Err(invalid(
                "parallelism above 1 is only allowed when every backend in use is simulated"
                    .into(),
            ));
        }
        Ok(())
    }

    /// The backend specs the requested conditions actually exercise.
    pub fn specs_in_use(&self) -> Vec<&BackendSpec> {
        let mut same = false;
        let mut different = false;
        for id in &self.conditions {
            match id.condition().pairing {
                Pairing::SameModel => same = true,
                Pairing::DifferentModels => different = true,
            }
        }
        let mut out = Vec::new();
        if same {
            out.push(&self.backends.same_pair);
        }
        if different {
            out.push(&self.backends.different_pair.m1);
            out.push(&self.backends.different_pair.m2);
        }
        out
    }

    pub fn all_simulated(&self) -> bool {
        self.specs_in_use().iter().all(|s| s.is_simulated())
    }

    /// Digest over the data-affecting fields only. Pacing, parallelism,
    /// and file locations are excluded so a journal can be resumed after
    /// moving the output directory or retuning throughput; the corpus is
    /// pinned separately by content digest in the manifest.
    pub fn digest(&self) -> String {
        #[derive(Serialize)]
        struct Digestable<'a> {
            conditions: &'a [ConditionId],
            trials_per_condition: u32,
            seed: u64,
            backends: &'a BackendPairs,
            parse_mode: ParseMode,
        }
        let bytes = serde_json::to_vec(&Digestable {
            conditions: &self.conditions,
            trials_per_condition: self.trials_per_condition,
            seed: self.seed,
            backends: &self.backends,
            parse_mode: self.parse_mode,
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn manifest(&self, corpus_digest: String, corpus_source: String) -> RunManifest {
        RunManifest {
            config_digest: self.digest(),
            corpus_digest,
            corpus_source,
            run_seed: self.seed,
            template_version: template_version(),
            conditions: self.conditions.clone(),
            trials_per_condition: self.trials_per_condition,
            harness_version: env!("CARGO_PKG_VERSION").into(),
            created_at: Utc::now(),
        }
    }
}

/// An experiment's manifest plus its records in journal order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub manifest: RunManifest,
    pub records: Vec<TrialRecord>,
}

impl RunLog {
    pub fn complete_for(&self, condition: ConditionId) -> Vec<&TrialRecord> {
        self.records
            .iter()
            .filter(|r| r.condition == condition && r.is_complete())
            .collect()
    }

    pub fn failed_count_for(&self, condition: ConditionId) -> usize {
        self.records
            .iter()
            .filter(|r| r.condition == condition && !r.is_complete())
            .count()
    }

    /// Conditions with at least one record, in canonical order.
    pub fn conditions_present(&self) -> Vec<ConditionId> {
        ConditionId::ALL
            .into_iter()
            .filter(|id| self.records.iter().any(|r| r.condition == *id))
            .collect()
    }
}

/// Reads a run back from disk: the journal plus its sibling manifest.
/// Returns the skipped-line report alongside so callers can surface it.
pub fn load_run(journal: &Path) -> Result<(RunLog, Vec<(u64, String)>), ProtocolError> {
    let dir = journal.parent().unwrap_or_else(|| Path::new("."));
    let manifest = read_manifest(&manifest_path(dir))?;
    let read = read_journal(journal)?;
    Ok((
        RunLog {
            manifest,
            records: read.records,
        },
        read.skipped,
    ))
}

/// Shared per-run machinery handed to each trial.
pub struct TrialContext<'a> {
    pub http: &'a reqwest::Client,
    pub gates: &'a GateMap,
    pub profiles: &'a ProfileLibrary,
    pub parse_mode: ParseMode,
}

/// Accumulates trial state so failures can emit a partial record.
struct Pending {
    trial_id: String,
    condition: ConditionId,
    trial_index: u32,
    review_id: String,
    review_label: Option<Sentiment>,
    seed: u64,
    m1_backend: String,
    m2_backend: String,
    m1_initial: Option<f64>,
    m2_initial: Option<f64>,
    m1_final: Option<f64>,
    m2_final: Option<f64>,
    m1_conv: Conversation,
    m2_conv: Conversation,
    started_at: DateTime<Utc>,
}

impl Pending {
    fn finish(self, status: TrialStatus) -> TrialRecord {
        TrialRecord {
            trial_id: self.trial_id,
            condition: self.condition,
            trial_index: self.trial_index,
            review_id: self.review_id,
            review_label: self.review_label,
            seed: self.seed,
            m1_backend: self.m1_backend,
            m2_backend: self.m2_backend,
            m1_initial: self.m1_initial,
            m2_initial: self.m2_initial,
            m1_final: self.m1_final,
            m2_final: self.m2_final,
            m1_transcript: self.m1_conv,
            m2_transcript: self.m2_conv,
            started_at: self.started_at,
            finished_at: Utc::now(),
            status,
        }
    }

    fn fail(self, reason: String) -> TrialRecord {
        self.finish(TrialStatus::Failed { reason })
    }
}

/// One prompt → completion → parse turn, with a single automatic
/// re-prompt of the same message when the reply does not parse.
async fn rated_turn(
    agent: &Agent,
    conv: &mut Conversation,
    prompt: &str,
    max_tokens: u32,
    mode: ParseMode,
) -> Result<f64, String> {
    conv.push_user(prompt);
    let reply = agent
        .complete(conv, max_tokens)
        .await
        .map_err(|e| e.to_string())?;
    conv.push_assistant(reply.clone()).map_err(|e| e.to_string())?;
    match parse_rating(&reply, mode) {
        Ok(value) => Ok(value),
        Err(first) => {
            log::warn!("rating reply did not parse ({first}); re-prompting once");
            conv.push_user(prompt);
            let retry = agent
                .complete(conv, max_tokens)
                .await
                .map_err(|e| e.to_string())?;
            conv.push_assistant(retry.clone())
                .map_err(|e| e.to_string())?;
            parse_rating(&retry, mode)
                .map_err(|e| format!("rating did not parse after one re-prompt: {e}"))
        }
    }
}

/// Prompt → completion turn whose reply is stored but never parsed.
async fn ack_turn(agent: &Agent, conv: &mut Conversation, prompt: &str) -> Result<(), String> {
    conv.push_user(prompt);
    let reply = agent
        .complete(conv, crate::agents::ACK_MAX_TOKENS)
        .await
        .map_err(|e| e.to_string())?;
    conv.push_assistant(reply).map_err(|e| e.to_string())?;
    Ok(())
}

fn slot_reasons(m1: &Result<f64, String>, m2: &Result<f64, String>) -> Option<String> {
    let mut parts = Vec::new();
    if let Err(e) = m1 {
        parts.push(format!("m1: {e}"));
    }
    if let Err(e) = m2 {
        parts.push(format!("m2: {e}"));
    }
    if parts.is_empty() {
        None
    } else {
        Some(parts.join("; "))
    }
}

/// Runs the four phases for one (condition, review, seed) and returns
/// the record — `Failed` with a partial transcript on any error, never
/// a hard failure.
#[allow(clippy::too_many_arguments)]
pub async fn run_trial(
    condition: &Condition,
    review: &Review,
    m1_spec: &BackendSpec,
    m2_spec: &BackendSpec,
    trial_index: u32,
    seed: u64,
    ctx: &TrialContext<'_>,
) -> TrialRecord {
    let mut pending = Pending {
        trial_id: super::record::trial_id(condition.id, trial_index),
        condition: condition.id,
        trial_index,
        review_id: review.id.clone(),
        review_label: review.label,
        seed,
        m1_backend: m1_spec.identifier(),
        m2_backend: m2_spec.identifier(),
        m1_initial: None,
        m2_initial: None,
        m1_final: None,
        m2_final: None,
        m1_conv: Conversation::new(),
        m2_conv: Conversation::new(),
        started_at: Utc::now(),
    };

    let m1_agent = match Agent::for_trial(
        m1_spec,
        review,
        slot_seed(seed, "m1"),
        ctx.http,
        ctx.gates,
    ) {
        Ok(agent) => agent,
        Err(e) => return pending.fail(format!("m1 backend: {e}")),
    };
    let m2_agent = match Agent::for_trial(
        m2_spec,
        review,
        slot_seed(seed, "m2"),
        ctx.http,
        ctx.gates,
    ) {
        Ok(agent) => agent,
        Err(e) => return pending.fail(format!("m2 backend: {e}")),
    };
    let m1_tokens = m1_spec.rating_max_tokens();
    let m2_tokens = m2_spec.rating_max_tokens();

    // Phase 1 — independent initial ratings, possibly concurrent.
    let p1 = match render_phase1(review) {
        Ok(p) => p,
        Err(e) => return pending.fail(format!("phase 1 render: {e}")),
    };
    let (r1, r2) = tokio::join!(
        rated_turn(&m1_agent, &mut pending.m1_conv, &p1.text, m1_tokens, ctx.parse_mode),
        rated_turn(&m2_agent, &mut pending.m2_conv, &p1.text, m2_tokens, ctx.parse_mode),
    );
    if let Ok(v) = r1 {
        pending.m1_initial = Some(v);
    }
    if let Ok(v) = r2 {
        pending.m2_initial = Some(v);
    }
    if let Some(reason) = slot_reasons(&r1, &r2) {
        return pending.fail(format!("phase 1: {reason}"));
    }
    let (m1_initial, m2_initial) = (
        pending.m1_initial.expect("just set"),
        pending.m2_initial.expect("just set"),
    );

    // Phase 2 — each agent is introduced to its *partner's* profile.
    let m1_hears = ctx.profiles.resolve(condition.m2_status);
    let m2_hears = ctx.profiles.resolve(condition.m1_status);
    let p2_m1 = match render_phase2(m1_hears) {
        Ok(p) => p,
        Err(e) => return pending.fail(format!("phase 2 render: {e}")),
    };
    let p2_m2 = match render_phase2(m2_hears) {
        Ok(p) => p,
        Err(e) => return pending.fail(format!("phase 2 render: {e}")),
    };
    if let Err(e) = ack_turn(&m1_agent, &mut pending.m1_conv, &p2_m1.text).await {
        return pending.fail(format!("phase 2 m1: {e}"));
    }
    if let Err(e) = ack_turn(&m2_agent, &mut pending.m2_conv, &p2_m2.text).await {
        return pending.fail(format!("phase 2 m2: {e}"));
    }

    // Phase 3 — rating revelation, delivered as context with no reply.
    let p3_m1 = match render_phase3(m1_initial, m2_initial) {
        Ok(p) => p,
        Err(e) => return pending.fail(format!("phase 3 render: {e}")),
    };
    let p3_m2 = match render_phase3(m2_initial, m1_initial) {
        Ok(p) => p,
        Err(e) => return pending.fail(format!("phase 3 render: {e}")),
    };
    pending.m1_conv.push_user(p3_m1.text);
    pending.m2_conv.push_user(p3_m2.text);

    // Phase 4 — final ratings, possibly concurrent.
    let p4 = render_phase4();
    let (f1, f2) = tokio::join!(
        rated_turn(&m1_agent, &mut pending.m1_conv, &p4.text, m1_tokens, ctx.parse_mode),
        rated_turn(&m2_agent, &mut pending.m2_conv, &p4.text, m2_tokens, ctx.parse_mode),
    );
    if let Ok(v) = f1 {
        pending.m1_final = Some(v);
    }
    if let Ok(v) = f2 {
        pending.m2_final = Some(v);
    }
    if let Some(reason) = slot_reasons(&f1, &f2) {
        return pending.fail(format!("phase 4: {reason}"));
    }

    pending.finish(TrialStatus::Complete)
}

fn file_digest(path: &Path) -> Result<String, ProtocolError> {
    let bytes = std::fs::read(path).map_err(|e| ProtocolError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn preflight_credentials(config: &RunConfig) -> Result<(), ProtocolError> {
    for spec in config.specs_in_use() {
        if let BackendSpec::Remote(remote) = spec {
            let present = std::env::var(&remote.credential_env)
                .map(|v| !v.is_empty())
                .unwrap_or(false);
            if !present {
                return Err(crate::agents::AgentError::MissingCredential {
                    var: remote.credential_env.clone(),
                }
                .into());
            }
        }
    }
    Ok(())
}

/// Runs every (condition, index) pair not in `existing`, appending each
/// record to the journal as it finishes. Shared by run and resume.
async fn execute_missing(
    config: &RunConfig,
    profiles: &ProfileLibrary,
    corpus: &Corpus,
    writer: &mut JournalWriter,
    existing: &HashSet<(ConditionId, u32)>,
    mut records: Vec<TrialRecord>,
) -> Result<Vec<TrialRecord>, ProtocolError> {
    let http = reqwest::Client::new();
    let gates = new_gate_map();
    let ctx = TrialContext {
        http: &http,
        gates: &gates,
        profiles,
        parse_mode: config.parse_mode,
    };
    let n = config.trials_per_condition;
    let delay = Duration::from_secs_f64(config.inter_trial_delay_seconds.max(0.0));
    let mut ran_any = false;

    for &cid in &config.conditions {
        let condition = cid.condition();
        let (m1_spec, m2_spec) = config.backends.for_pairing(condition.pairing);
        let sample = sample_reviews(corpus, n as usize, sample_seed(config.seed, cid.as_str()))?;
        let missing: Vec<u32> = (0..n).filter(|i| !existing.contains(&(cid, *i))).collect();
        let mut completed = 0usize;
        let mut failed = 0usize;

        for chunk in missing.chunks(config.parallelism.max(1) as usize) {
            if ran_any && !delay.is_zero() {
                tokio::time::sleep(delay).await;
            }
            ran_any = true;
            let futures = chunk.iter().map(|&i| {
                let review = sample[i as usize];
                let seed = trial_seed(config.seed, cid.as_str(), i as u64);
                run_trial(&condition, review, m1_spec, m2_spec, i, seed, &ctx)
            });
            for record in join_all(futures).await {
                if record.is_complete() {
                    completed += 1;
                } else {
                    failed += 1;
                }
                writer.append(&record)?;
                records.push(record);
            }
        }
        if !missing.is_empty() {
            log::info!(
                "{cid}: ran {} trial(s) ({completed} complete, {failed} failed)",
                missing.len()
            );
        }
    }
    Ok(records)
}

/// Starts a fresh experiment: validates, writes the manifest, then runs
/// and journals every trial. Fails up front if a journal already exists.
pub async fn run_experiment(
    config: &RunConfig,
    profiles: &ProfileLibrary,
) -> Result<RunLog, ProtocolError> {
    config.validate()?;
    profiles.validate()?;
    preflight_credentials(config)?;
    let corpus = load_corpus(&config.corpus_path, config.corpus_format)?;
    let corpus_digest = file_digest(&config.corpus_path)?;

    let jpath = journal_path(&config.output_dir);
    if jpath.exists() {
        return Err(ProtocolError::JournalExists { path: jpath });
    }
    let manifest = config.manifest(corpus_digest, corpus.source.clone());
    write_manifest(&config.output_dir, &manifest)?;
    let mut writer = JournalWriter::create(&config.output_dir)?;
    let records = execute_missing(
        config,
        profiles,
        &corpus,
        &mut writer,
        &HashSet::new(),
        Vec::new(),
    )
    .await?;
    Ok(RunLog { manifest, records })
}

/// Continues an interrupted run. The stored manifest must match this
/// config (digest, corpus content, template version); on mismatch the
/// journal is left untouched.
pub async fn resume_experiment(
    config: &RunConfig,
    profiles: &ProfileLibrary,
) -> Result<RunLog, ProtocolError> {
    config.validate()?;
    profiles.validate()?;

    let jpath = journal_path(&config.output_dir);
    if !jpath.exists() {
        return Err(ProtocolError::JournalMissing { path: jpath });
    }
    let mpath = manifest_path(&config.output_dir);
    let manifest = read_manifest(&mpath)?;
    let mismatch = |detail: String| ProtocolError::ManifestMismatch {
        path: mpath.clone(),
        detail,
    };
    if manifest.config_digest != config.digest() {
        return Err(mismatch(format!(
            "config digest {} does not match the journal's {}",
            config.digest(),
            manifest.config_digest
        )));
    }
    if manifest.template_version != template_version() {
        return Err(mismatch(format!(
            "templates changed since the run started ({} now, {} then)",
            template_version(),
            manifest.template_version
        )));
    }
    let corpus_digest = file_digest(&config.corpus_path)?;
    if manifest.corpus_digest != corpus_digest {
        return Err(mismatch(
            "corpus file content differs from the one the run started with".into(),
        ));
    }

    preflight_credentials(config)?;
    let corpus = load_corpus(&config.corpus_path, config.corpus_format)?;
    let read = read_journal(&jpath)?;
    let existing: HashSet<(ConditionId, u32)> = read
        .records
        .iter()
        .map(|r| (r.condition, r.trial_index))
        .collect();
    let mut writer = JournalWriter::append_to(&config.output_dir)?;
    let records = execute_missing(config, profiles, &corpus, &mut writer, &existing, read.records)
        .await?;
    Ok(RunLog { manifest, records })
}
