//! `deference` — command-line front end for the paired-agent deference
//! experiment harness.
//!
//! Subcommands: `validate` (check a config and echo the resolved
//! settings), `run` (execute or resume an experiment), `analyze`
//! (print the statistics for a finished journal), and `report`
//! (export those statistics to files).
//!
//! Exit codes: 0 success, 1 configuration or usage problems (bad
//! flags, unparseable config, missing credentials, journal/manifest
//! conflicts), 2 failures while running trials or writing results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use deference_core::agents::AgentError;
use deference_core::config::{describe, load_config, ConfigError, Overrides, ResolvedConfig};
use deference_core::protocol::{
    journal_path, load_run, read_journal, resume_experiment, run_experiment, ConditionId,
    ProtocolError, RunLog, JOURNAL_FILE,
};
use deference_core::report::{
    build_bundle_with, export, render_contrasts_markdown, render_descriptive_markdown,
    ReportBundle, ReportError, ReportFormat,
};
use deference_core::{DEFAULT_BOOTSTRAP_ITERATIONS, DEFAULT_CONFIDENCE, DEFAULT_THRESHOLD};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "deference",
    version,
    about = "Paired-agent sentiment-rating deference experiments",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config file and print the fully resolved settings.
    Validate(ValidateArgs),
    /// Run an experiment (or resume an interrupted one) and journal
    /// every trial.
    Run(RunArgs),
    /// Compute deference statistics from a journal and print them.
    Analyze(AnalyzeArgs),
    /// Export deference statistics from a journal to files.
    Report(ReportArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Path to the JSON config file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Continue an interrupted run instead of starting a new one.
    #[arg(long)]
    resume: bool,
    /// Conditions to run (comma separated), overriding the config.
    #[arg(long, value_delimiter = ',')]
    conditions: Option<Vec<ConditionId>>,
    /// Trials per condition, overriding the config.
    #[arg(long)]
    trials: Option<u32>,
    /// Run seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the manifest and journal, overriding the
    /// config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run output directory, or the journal.jsonl file itself.
    #[arg(long)]
    journal: PathBuf,
    /// Minimum rating change that counts as a revision.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Also export the tables to this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Formats for --out (repeatable: markdown, csv, jsonl).
    #[arg(long = "format", value_parser = parse_format)]
    formats: Vec<ReportFormat>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run output directory, or the journal.jsonl file itself.
    #[arg(long)]
    journal: PathBuf,
    /// Directory to write the report files into.
    #[arg(long)]
    out: PathBuf,
    /// Formats to write (repeatable: markdown, csv, jsonl). Defaults
    /// to all three.
    #[arg(long = "format", value_parser = parse_format)]
    formats: Vec<ReportFormat>,
    /// Minimum rating change that counts as a revision.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

fn parse_format(raw: &str) -> Result<ReportFormat, String> {
    raw.parse()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are not errors; everything else is a
            // usage problem.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let outcome = match cli.command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(err: ConfigError) -> Self {
        Failure::config(err.to_string())
    }
}

impl From<ProtocolError> for Failure {
    fn from(err: ProtocolError) -> Self {
        let code = match &err {
            ProtocolError::InvalidConfig(_)
            | ProtocolError::Corpus(_)
            | ProtocolError::JournalExists { .. }
            | ProtocolError::JournalMissing { .. }
            | ProtocolError::ManifestMismatch { .. }
            | ProtocolError::ManifestUnreadable { .. } => EXIT_CONFIG,
            ProtocolError::Agent(AgentError::MissingCredential { .. }) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(err: ReportError) -> Self {
        Failure::runtime(err.to_string())
    }
}

fn resolve(config_path: &Path, overrides: &Overrides) -> Result<ResolvedConfig, Failure> {
    let file = load_config(config_path)?;
    Ok(file.resolve(overrides)?)
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let resolved = resolve(&args.config, &Overrides::default())?;
    println!("{}", describe(&resolved));
    println!("config ok");
    Ok(())
}

/// Accepts either a run directory or the journal file inside it.
fn normalize_journal(path: &Path) -> Result<PathBuf, Failure> {
    let journal = if path.is_dir() {
        journal_path(path)
    } else {
        path.to_path_buf()
    };
    if !journal.is_file() {
        return Err(Failure::config(format!(
            "no journal found at {} (expected a run directory containing {JOURNAL_FILE}, \
             or the file itself)",
            journal.display()
        )));
    }
    Ok(journal)
}

fn warn_skipped(skipped: &[(u64, String)]) {
    for (line, reason) in skipped {
        eprintln!("warning: journal line {line} skipped: {reason}");
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::runtime(format!("could not start async runtime: {e}")))
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let overrides = Overrides {
        conditions: args.conditions.clone(),
        trials_per_condition: args.trials,
        seed: args.seed,
        output_dir: args.out.clone(),
        ..Overrides::default()
    };
    let resolved = resolve(&args.config, &overrides)?;
    let config = &resolved.run;

    let mut already_done = 0usize;
    if args.resume {
        // Pre-read to report skipped lines and detect the nothing-to-do
        // case; resume_experiment re-reads for its own bookkeeping.
        let jpath = journal_path(&config.output_dir);
        if jpath.is_file() {
            let read = read_journal(&jpath)?;
            warn_skipped(&read.skipped);
            already_done = read
                .records
                .iter()
                .filter(|r| {
                    config.conditions.contains(&r.condition)
                        && r.trial_index < config.trials_per_condition
                })
                .count();
        }
    }

    let rt = runtime()?;
    let run = if args.resume {
        rt.block_on(resume_experiment(config, &resolved.profiles))?
    } else {
        rt.block_on(run_experiment(config, &resolved.profiles))?
    };

    let expected = config.conditions.len() * config.trials_per_condition as usize;
    if args.resume && already_done >= expected {
        println!(
            "nothing to do: journal already holds all {expected} trial(s) for this config"
        );
        return Ok(());
    }

    println!("run complete: journal at {}", journal_path(&config.output_dir).display());
    for &cid in &config.conditions {
        let complete = run.complete_for(cid).len();
        let failed = run.failed_count_for(cid);
        println!("  {cid}: {complete} complete, {failed} failed");
    }
    print_tables(&run, resolved.threshold, resolved.confidence, resolved.bootstrap_iterations)?;
    Ok(())
}

fn build(
    run: &RunLog,
    threshold: f64,
) -> Result<(ReportBundle, Vec<String>), Failure> {
    Ok(build_bundle_with(
        run,
        threshold,
        DEFAULT_CONFIDENCE,
        DEFAULT_BOOTSTRAP_ITERATIONS,
    )?)
}

fn print_tables(
    run: &RunLog,
    threshold: f64,
    confidence: f64,
    iterations: u64,
) -> Result<(), Failure> {
    let (bundle, warnings) = match build_bundle_with(run, threshold, confidence, iterations as usize)
    {
        Ok(built) => built,
        // A run whose trials all failed still journaled everything it
        // could; the summary just has no statistics to show.
        Err(e @ (ReportError::EmptyCondition { .. } | ReportError::EmptyRun)) => {
            eprintln!("warning: statistics unavailable: {e}");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    println!();
    println!("Deference rates (threshold {threshold}):");
    println!();
    print!("{}", render_descriptive_markdown(&bundle.descriptive));
    if let Some(contrasts) = &bundle.contrasts {
        println!();
        println!("Planned contrasts:");
        println!();
        print!("{}", render_contrasts_markdown(contrasts));
    }
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let journal = normalize_journal(&args.journal)?;
    let (run, skipped) = load_run(&journal)?;
    warn_skipped(&skipped);
    if run.records.is_empty() {
        return Err(Failure::config(format!(
            "journal at {} holds no usable records",
            journal.display()
        )));
    }

    let (bundle, warnings) = build(&run, args.threshold)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    print!("{}", render_descriptive_markdown(&bundle.descriptive));
    if let Some(contrasts) = &bundle.contrasts {
        println!();
        print!("{}", render_contrasts_markdown(contrasts));
    }

    if let Some(dir) = &args.out {
        let formats = if args.formats.is_empty() {
            vec![ReportFormat::Markdown]
        } else {
            args.formats.clone()
        };
        export_all(&bundle, &formats, dir)?;
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), Failure> {
    let journal = normalize_journal(&args.journal)?;
    let (run, skipped) = load_run(&journal)?;
    warn_skipped(&skipped);
    if run.records.is_empty() {
        return Err(Failure::config(format!(
            "journal at {} holds no usable records",
            journal.display()
        )));
    }

    let (bundle, warnings) = build(&run, args.threshold)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    let formats = if args.formats.is_empty() {
        ReportFormat::ALL.to_vec()
    } else {
        args.formats.clone()
    };
    export_all(&bundle, &formats, &args.out)?;
    Ok(())
}

fn export_all(
    bundle: &ReportBundle,
    formats: &[ReportFormat],
    dir: &Path,
) -> Result<(), Failure> {
    let mut seen = Vec::new();
    for &format in formats {
        if seen.contains(&format) {
            continue;
        }
        seen.push(format);
        for path in export(bundle, format, dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
