//! Aggregation of a run into the two results tables, with markdown,
//! CSV, and JSONL exports.
//!
//! Rendering rules: percentages to one decimal (half away from zero),
//! p-values below 1e-3 shown as `<.001`; machine formats always carry
//! full precision. Everything is deterministic given (run, threshold) —
//! bootstrap seeds derive from the run manifest, and no timestamp
//! appears in the data files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{ConditionId, RunLog, RunManifest, TrialRecord};
use crate::seeds::bootstrap_seed;
use crate::stats::{
    bootstrap_asymmetry, deference_flags, deference_rate, planned_contrasts, ConditionCounts,
    Slot, StatsError,
};
use crate::{
    AsymmetryEstimate, ContrastResult, ProportionEstimate, DEFAULT_BOOTSTRAP_ITERATIONS,
    DEFAULT_CONFIDENCE,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("condition {condition} has no complete trials")]
    EmptyCondition { condition: ConditionId },
    #[error("run contains no trials at all")]
    EmptyRun,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("could not parse report bundle: {0}")]
    Parse(String),
}

/// One descriptive-table row: per-condition ns, both slots' deference
/// rates with Wilson intervals, and the bootstrapped asymmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveRow {
    pub condition: ConditionId,
    /// Complete trials aggregated into the estimates.
    pub n: u64,
    /// Failed trials excluded from every denominator.
    pub failed: u64,
    pub m1: ProportionEstimate,
    pub m2: ProportionEstimate,
    pub asymmetry: AsymmetryEstimate,
}

/// Everything one analysis produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub manifest: RunManifest,
    pub descriptive: Vec<DescriptiveRow>,
    /// `None` when the run lacks conditions required by the contrast
    /// family (descriptive-only fallback).
    pub contrasts: Option<Vec<ContrastResult>>,
    pub generated_at: DateTime<Utc>,
}

impl ReportBundle {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json_str(raw: &str) -> Result<Self, ReportError> {
        serde_json::from_str(raw).map_err(|e| ReportError::Parse(e.to_string()))
    }
}

/// Export formats for [`export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Jsonl,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [
        ReportFormat::Markdown,
        ReportFormat::Csv,
        ReportFormat::Jsonl,
    ];

    fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" => Ok(ReportFormat::Jsonl),
            other => Err(format!(
                "unknown report format {other:?}; expected markdown, csv, or jsonl"
            )),
        }
    }
}

fn complete_refs(run: &RunLog, condition: ConditionId) -> Vec<&TrialRecord> {
    run.complete_for(condition)
}

/// Builds the per-condition table with explicit estimation parameters.
pub fn descriptive_table_with(
    run: &RunLog,
    threshold: f64,
    confidence: f64,
    iterations: usize,
) -> Result<Vec<DescriptiveRow>, ReportError> {
    let conditions = run.conditions_present();
    if conditions.is_empty() {
        return Err(ReportError::EmptyRun);
    }
    let mut rows = Vec::with_capacity(conditions.len());
    for condition in conditions {
        let records = complete_refs(run, condition);
        if records.is_empty() {
            return Err(ReportError::EmptyCondition { condition });
        }
        let m1 = deference_rate(&records, Slot::M1, threshold, confidence)?;
        let m2 = deference_rate(&records, Slot::M2, threshold, confidence)?;
        let asymmetry = bootstrap_asymmetry(
            &records,
            threshold,
            iterations,
            confidence,
            bootstrap_seed(run.manifest.run_seed, condition.as_str()),
        )?;
        rows.push(DescriptiveRow {
            condition,
            n: records.len() as u64,
            failed: run.failed_count_for(condition) as u64,
            m1,
            m2,
            asymmetry,
        });
    }
    Ok(rows)
}

pub fn descriptive_table(run: &RunLog, threshold: f64) -> Result<Vec<DescriptiveRow>, ReportError> {
    descriptive_table_with(run, threshold, DEFAULT_CONFIDENCE, DEFAULT_BOOTSTRAP_ITERATIONS)
}

/// The four planned contrasts over M2 deference rates. Requires every
/// condition of the six-cell design to have at least one complete trial.
pub fn contrasts_table(run: &RunLog, threshold: f64) -> Result<Vec<ContrastResult>, ReportError> {
    let mut counts = BTreeMap::new();
    for condition in ConditionId::ALL {
        let records = complete_refs(run, condition);
        if records.is_empty() {
            continue; // planned_contrasts reports the missing condition
        }
        let flags = deference_flags(&records, threshold)?;
        counts.insert(
            condition,
            ConditionCounts {
                m2_deferred: flags.iter().filter(|f| f.m2_deferred).count() as u64,
                n: records.len() as u64,
            },
        );
    }
    Ok(planned_contrasts::<f64>(&counts)?)
}

/// Builds the full bundle. When conditions required by the contrast
/// family are absent, falls back to descriptive-only and explains why
/// in the returned warnings.
pub fn build_bundle_with(
    run: &RunLog,
    threshold: f64,
    confidence: f64,
    iterations: usize,
) -> Result<(ReportBundle, Vec<String>), ReportError> {
    let descriptive = descriptive_table_with(run, threshold, confidence, iterations)?;
    let mut warnings = Vec::new();
    let contrasts = match contrasts_table(run, threshold) {
        Ok(rows) => Some(rows),
        Err(ReportError::Stats(StatsError::MissingCondition { .. })) => {
            let have: Vec<String> = run
                .conditions_present()
                .iter()
                .map(|c| c.to_string())
                .collect();
            warnings.push(format!(
                "contrasts skipped: the contrast family needs all six conditions, run has only [{}]",
                have.join(", ")
            ));
            None
        }
        Err(e) => return Err(e),
    };
    Ok((
        ReportBundle {
            manifest: run.manifest.clone(),
            descriptive,
            contrasts,
            generated_at: Utc::now(),
        },
        warnings,
    ))
}

pub fn build_bundle(
    run: &RunLog,
    threshold: f64,
) -> Result<(ReportBundle, Vec<String>), ReportError> {
    build_bundle_with(run, threshold, DEFAULT_CONFIDENCE, DEFAULT_BOOTSTRAP_ITERATIONS)
}

// ---------------------------------------------------------------------------
// Rendering primitives
// ---------------------------------------------------------------------------

/// One-decimal rendering, rounding halves away from zero on the stored
/// double. `-0.05 < x` with tiny magnitude renders as `0.0`, never `-0.0`.
fn one_decimal(x: f64) -> String {
    let scaled = x * 10.0;
    let rounded = if scaled >= 0.0 {
        (scaled + 0.5).floor()
    } else {
        (scaled - 0.5).ceil()
    };
    let mut value = rounded / 10.0;
    if value == 0.0 {
        value = 0.0; // normalize -0.0
    }
    format!("{value:.1}")
}

fn percent_cell(estimate: &ProportionEstimate) -> String {
    format!(
        "{}% [{}, {}]",
        one_decimal(estimate.rate * 100.0),
        one_decimal(estimate.ci_low * 100.0),
        one_decimal(estimate.ci_high * 100.0)
    )
}

fn asymmetry_cell(estimate: &AsymmetryEstimate) -> String {
    format!(
        "{} [{}, {}]",
        one_decimal(estimate.point * 100.0),
        one_decimal(estimate.ci_low * 100.0),
        one_decimal(estimate.ci_high * 100.0)
    )
}

/// Paper-style p rendering: `<.001` below 1e-3, else three decimals
/// without a leading zero.
fn p_cell(p: f64) -> String {
    if p < 0.001 {
        "<.001".to_string()
    } else {
        let text = format!("{p:.3}");
        text.strip_prefix('0').map(str::to_string).unwrap_or(text)
    }
}

fn signed_percent(diff: f64) -> String {
    format!("{}%", one_decimal(diff * 100.0))
}

pub fn render_descriptive_markdown(rows: &[DescriptiveRow]) -> String {
    let mut out = String::from("# Descriptive statistics by condition\n\n");
    out.push_str("| Condition | N | M1 Def. | M2 Def. | Asymmetry |\n");
    out.push_str("| --- | ---: | --- | --- | --- |\n");
    for row in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            row.condition,
            row.n,
            percent_cell(&row.m1),
            percent_cell(&row.m2),
            asymmetry_cell(&row.asymmetry)
        ));
    }
    out.push_str(
        "\nRates are percentages of complete trials; intervals are Wilson scores, \
         asymmetry intervals are percentile bootstrap (percentage points).\n",
    );
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.failed > 0)
        .map(|r| format!("{}: {}", r.condition, r.failed))
        .collect();
    if failed.is_empty() {
        out.push_str("\nFailed trials: none.\n");
    } else {
        out.push_str(&format!("\nFailed trials: {}.\n", failed.join(", ")));
    }
    out
}

pub fn render_contrasts_markdown(rows: &[ContrastResult]) -> String {
    let mut out = String::from("# Planned contrasts (M2 deference rates)\n\n");
    out.push_str("| Contrast | Comparison | Difference | Chi-square | p | p (Holm) | Cohen's h |\n");
    out.push_str("| --- | --- | ---: | ---: | ---: | ---: | ---: |\n");
    for row in rows {
        out.push_str(&format!(
            "| {} | {} vs {} | {} | {:.2} | {} | {} | {:.2} |\n",
            row.name.label(),
            row.condition1,
            row.condition2,
            signed_percent(row.diff),
            row.chi2,
            p_cell(row.p_raw),
            p_cell(row.p_corrected),
            row.h
        ));
    }
    out.push_str("\nHolm correction applied across the four contrasts.\n");
    out
}

// ---------------------------------------------------------------------------
// File export
// ---------------------------------------------------------------------------

fn io_err(path: &Path, source: std::io::Error) -> ReportError {
    ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), ReportError> {
    std::fs::write(path, content).map_err(|e| io_err(path, e))
}

fn descriptive_csv(rows: &[DescriptiveRow]) -> String {
    let mut out = String::from(
        "condition,n,failed,m1_deferred,m1_rate,m1_ci_low,m1_ci_high,\
         m2_deferred,m2_rate,m2_ci_low,m2_ci_high,\
         asymmetry,asymmetry_ci_low,asymmetry_ci_high,\
         confidence,bootstrap_iterations,bootstrap_seed\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.condition,
            r.n,
            r.failed,
            r.m1.successes,
            r.m1.rate,
            r.m1.ci_low,
            r.m1.ci_high,
            r.m2.successes,
            r.m2.rate,
            r.m2.ci_low,
            r.m2.ci_high,
            r.asymmetry.point,
            r.asymmetry.ci_low,
            r.asymmetry.ci_high,
            r.m1.confidence,
            r.asymmetry.iterations,
            r.asymmetry.seed
        ));
    }
    out
}

fn contrasts_csv(rows: &[ContrastResult]) -> String {
    let mut out =
        String::from("contrast,condition1,condition2,rate1,rate2,diff,chi2,p_raw,p_corrected,h\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.name.label().replace(' ', "_").to_lowercase(),
            r.condition1,
            r.condition2,
            r.rate1,
            r.rate2,
            r.diff,
            r.chi2,
            r.p_raw,
            r.p_corrected,
            r.h
        ));
    }
    out
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("row serializes"));
        out.push('\n');
    }
    out
}

/// Writes `descriptive.<ext>`, `contrasts.<ext>` (when present), and a
/// `manifest.json` echo of the run manifest into `dir`. Returns the
/// written paths. Data files carry no timestamps, so re-exporting the
/// same bundle is byte-identical.
pub fn export(
    bundle: &ReportBundle,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();

    let descriptive_path = dir.join(format!("descriptive.{}", format.extension()));
    let descriptive_content = match format {
        ReportFormat::Markdown => render_descriptive_markdown(&bundle.descriptive),
        ReportFormat::Csv => descriptive_csv(&bundle.descriptive),
        ReportFormat::Jsonl => jsonl(&bundle.descriptive),
    };
    write_file(&descriptive_path, &descriptive_content)?;
    written.push(descriptive_path);

    if let Some(contrasts) = &bundle.contrasts {
        let contrasts_path = dir.join(format!("contrasts.{}", format.extension()));
        let contrasts_content = match format {
            ReportFormat::Markdown => render_contrasts_markdown(contrasts),
            ReportFormat::Csv => contrasts_csv(contrasts),
            ReportFormat::Jsonl => jsonl(contrasts),
        };
        write_file(&contrasts_path, &contrasts_content)?;
        written.push(contrasts_path);
    }

    // Echo the run manifest unchanged so the report directory is
    // self-describing; same schema as the run's own manifest.json.
    let manifest_path = dir.join("manifest.json");
    let mut manifest_body =
        serde_json::to_string_pretty(&bundle.manifest).expect("manifest serializes");
    manifest_body.push('\n');
    write_file(&manifest_path, &manifest_body)?;
    written.push(manifest_path);

    Ok(written)
}
