//! Operator-facing configuration: a single JSON document with strict
//! schema checking, plus flag overrides resolved at precedence
//! flag > file > default.
//!
//! The credential for a remote backend is *never* part of the file —
//! only the name of the environment variable that holds it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::ParseMode;
use crate::corpus::CorpusFormat;
use crate::prompts::ProfileLibrary;
use crate::protocol::{BackendPairs, ConditionId, RunConfig};
use crate::report::ReportFormat;
use crate::{DEFAULT_BOOTSTRAP_ITERATIONS, DEFAULT_CONFIDENCE, DEFAULT_THRESHOLD};

pub const DEFAULT_TRIALS_PER_CONDITION: u32 = 500;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REMOTE_DELAY_SECONDS: f64 = 0.5;
pub const DEFAULT_OUTPUT_DIR: &str = "run-output";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not read config at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config at {path} does not parse: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("config field `{field}`: {detail}")]
    Field {
        field: &'static str,
        detail: String,
    },
    #[error("profile library at {path}: {detail}")]
    Profiles { path: PathBuf, detail: String },
}

/// Corpus location and, optionally, an explicit format. Without one the
/// format is inferred from the file extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<CorpusFormat>,
}

/// The config file schema. Only `corpus` and `backends` are required;
/// everything else falls back to documented defaults (threshold 0.01,
/// confidence 0.95, 10,000 bootstrap iterations, 500 trials/condition,
/// strict parsing, 0.5 s delay when any remote backend is in use).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub corpus: CorpusConfig,
    pub backends: BackendPairs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<Vec<ConditionId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_per_condition: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_trial_delay_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_mode: Option<ParseMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<u32>,
    /// Path to a JSON file overriding the built-in status profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_library: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_formats: Option<Vec<ReportFormat>>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub conditions: Option<Vec<ConditionId>>,
    pub trials_per_condition: Option<u32>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub report_formats: Option<Vec<ReportFormat>>,
}

/// A fully resolved configuration: every default applied, every file
/// loaded and validated.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub run: RunConfig,
    pub profiles: ProfileLibrary,
    pub threshold: f64,
    pub confidence: f64,
    pub bootstrap_iterations: u64,
    pub report_formats: Vec<ReportFormat>,
}

pub fn load_config(path: &Path) -> Result<CliConfig, ConfigError> {
    let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&raw).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn infer_format(path: &Path) -> Result<CorpusFormat, ConfigError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(CorpusFormat::Csv),
        Some("jsonl") | Some("ndjson") => Ok(CorpusFormat::Jsonl),
        other => Err(ConfigError::Field {
            field: "corpus.format",
            detail: format!(
                "cannot infer corpus format from extension {other:?}; set corpus.format to csv or jsonl"
            ),
        }),
    }
}

fn load_profiles(path: &Path) -> Result<ProfileLibrary, ConfigError> {
    let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Profiles {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let library: ProfileLibrary =
        serde_json::from_str(&raw).map_err(|e| ConfigError::Profiles {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    library.validate().map_err(|e| ConfigError::Profiles {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    Ok(library)
}

impl CliConfig {
    /// Applies overrides and defaults, loads the profile library, and
    /// validates every field. Relative profile/corpus paths are taken
    /// as written (resolve them against the process working directory).
    pub fn resolve(&self, overrides: &Overrides) -> Result<ResolvedConfig, ConfigError> {
        let conditions = overrides
            .conditions
            .clone()
            .or_else(|| self.conditions.clone())
            .unwrap_or_else(|| ConditionId::ALL.to_vec());
        if conditions.is_empty() {
            return Err(ConfigError::Field {
                field: "conditions",
                detail: "must list at least one condition".into(),
            });
        }

        let trials = overrides
            .trials_per_condition
            .or(self.trials_per_condition)
            .unwrap_or(DEFAULT_TRIALS_PER_CONDITION);
        if trials < 1 {
            return Err(ConfigError::Field {
                field: "trials_per_condition",
                detail: "must be at least 1".into(),
            });
        }

        let threshold = overrides.threshold.or(self.threshold).unwrap_or(DEFAULT_THRESHOLD);
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ConfigError::Field {
                field: "threshold",
                detail: format!("must lie strictly between 0 and 1, got {threshold}"),
            });
        }

        let confidence = self.confidence.unwrap_or(DEFAULT_CONFIDENCE);
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(ConfigError::Field {
                field: "confidence",
                detail: format!("must lie strictly between 0 and 1, got {confidence}"),
            });
        }

        let bootstrap_iterations = self
            .bootstrap_iterations
            .unwrap_or(DEFAULT_BOOTSTRAP_ITERATIONS as u64);
        if bootstrap_iterations < 1 {
            return Err(ConfigError::Field {
                field: "bootstrap_iterations",
                detail: "must be at least 1".into(),
            });
        }

        let corpus_format = match self.corpus.format {
            Some(f) => f,
            None => infer_format(&self.corpus.path)?,
        };

        let parallelism = self.parallelism.unwrap_or(1);
        if parallelism < 1 {
            return Err(ConfigError::Field {
                field: "parallelism",
                detail: "must be at least 1".into(),
            });
        }

        let run = RunConfig {
            conditions,
            trials_per_condition: trials,
            corpus_path: self.corpus.path.clone(),
            corpus_format,
            seed: overrides.seed.or(self.seed).unwrap_or(DEFAULT_SEED),
            backends: self.backends.clone(),
            // Delay defaults to 0.5 s only when a remote endpoint needs
            // pacing; all-simulated runs have nothing to pace.
            inter_trial_delay_seconds: 0.0,
            output_dir: overrides
                .output_dir
                .clone()
                .or_else(|| self.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            parse_mode: self.parse_mode.unwrap_or(ParseMode::Strict),
            parallelism,
        };
        let mut run = run;
        run.inter_trial_delay_seconds = match self.inter_trial_delay_seconds {
            Some(d) => {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(ConfigError::Field {
                        field: "inter_trial_delay_seconds",
                        detail: format!("must be finite and nonnegative, got {d}"),
                    });
                }
                d
            }
            None if run.all_simulated() => 0.0,
            None => DEFAULT_REMOTE_DELAY_SECONDS,
        };
        if run.parallelism > 1 && !run.all_simulated() {
            return Err(ConfigError::Field {
                field: "parallelism",
                detail: "above 1 requires every backend in use to be simulated".into(),
            });
        }

        let profiles = match &self.profile_library {
            Some(path) => load_profiles(path)?,
            None => ProfileLibrary::default(),
        };

        let report_formats = overrides
            .report_formats
            .clone()
            .or_else(|| self.report_formats.clone())
            .unwrap_or_else(|| ReportFormat::ALL.to_vec());
        if report_formats.is_empty() {
            return Err(ConfigError::Field {
                field: "report_formats",
                detail: "must list at least one format".into(),
            });
        }

        Ok(ResolvedConfig {
            run,
            profiles,
            threshold,
            confidence,
            bootstrap_iterations,
            report_formats,
        })
    }
}

/// A normalized echo of the resolved configuration, for `validate`.
pub fn describe(resolved: &ResolvedConfig) -> String {
    let run = &resolved.run;
    let conditions: Vec<&str> = run.conditions.iter().map(|c| c.as_str()).collect();
    let formats: Vec<String> = resolved
        .report_formats
        .iter()
        .map(|f| format!("{f:?}").to_lowercase())
        .collect();
    format!(
        "conditions: {}\n\
         trials_per_condition: {}\n\
         corpus: {} ({})\n\
         seed: {}\n\
         output_dir: {}\n\
         parse_mode: {:?}\n\
         inter_trial_delay_seconds: {}\n\
         parallelism: {}\n\
         all_simulated: {}\n\
         threshold: {}\n\
         confidence: {}\n\
         bootstrap_iterations: {}\n\
         report_formats: {}\n\
         config_digest: {}",
        conditions.join(", "),
        run.trials_per_condition,
        run.corpus_path.display(),
        run.corpus_format,
        run.seed,
        run.output_dir.display(),
        run.parse_mode,
        run.inter_trial_delay_seconds,
        run.parallelism,
        run.all_simulated(),
        resolved.threshold,
        resolved.confidence,
        resolved.bootstrap_iterations,
        formats.join(", "),
        run.digest(),
    )
}
