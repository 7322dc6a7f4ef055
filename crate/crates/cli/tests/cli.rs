//! End-to-end tests of the `deference` binary: exit codes, run/resume
//! behaviour, analysis output, and config error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

const BIN: &str = env!("CARGO_BIN_EXE_deference");

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary launches")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn write_corpus(dir: &Path, rows: usize) -> PathBuf {
    let path = dir.join("reviews.csv");
    let mut body = String::from("id,text,label\n");
    for i in 0..rows {
        body.push_str(&format!("r{i:03},Review number {i} reads nicely.,positive\n"));
    }
    std::fs::write(&path, body).unwrap();
    path
}

/// An all-simulated two-condition config writing into `out/`.
fn write_config(dir: &Path) -> PathBuf {
    write_corpus(dir, 40);
    let config = r#"{
        "corpus": { "path": "reviews.csv" },
        "conditions": ["same_standard", "same_equal"],
        "trials_per_condition": 5,
        "seed": 3,
        "output_dir": "out",
        "backends": {
            "same_pair": {
                "kind": "simulated",
                "initial_center": 0.45,
                "initial_jitter": 0.1,
                "defer_prob": 0.5,
                "defer_step": 0.5
            },
            "different_pair": {
                "m1": {
                    "kind": "simulated",
                    "initial_center": 0.3,
                    "initial_jitter": 0.05,
                    "defer_prob": 0.25,
                    "defer_step": 0.5
                },
                "m2": {
                    "kind": "simulated",
                    "initial_center": 0.7,
                    "initial_jitter": 0.05,
                    "defer_prob": 0.6,
                    "defer_step": 0.5
                }
            }
        }
    }"#;
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn simulated_smoke_run_completes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());

    let started = Instant::now();
    let output = run(&["run", "--config", "config.json"], dir.path());
    let elapsed = started.elapsed();

    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "smoke run took {elapsed:?}, expected under 5 s"
    );
    let out = stdout(&output);
    assert!(out.contains("same_standard: 5 complete, 0 failed"), "{out}");
    assert!(out.contains("same_equal: 5 complete, 0 failed"), "{out}");

    let journal = std::fs::read_to_string(dir.path().join("out/journal.jsonl")).unwrap();
    assert_eq!(journal.lines().count(), 10);
    assert!(dir.path().join("out/manifest.json").is_file());
}

#[test]
fn second_run_refuses_then_resume_reports_nothing_to_do() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());

    let first = run(&["run", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&first), 0, "stderr: {}", stderr(&first));

    // Plain rerun must refuse to clobber the journal...
    let second = run(&["run", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&second), 1);
    assert!(
        stderr(&second).contains("journal already exists"),
        "stderr: {}",
        stderr(&second)
    );

    // ...while --resume sees a complete journal and does nothing.
    let resume = run(&["run", "--config", "config.json", "--resume"], dir.path());
    assert_eq!(exit_code(&resume), 0, "stderr: {}", stderr(&resume));
    assert!(
        stdout(&resume).contains("nothing to do"),
        "stdout: {}",
        stdout(&resume)
    );
    let journal = std::fs::read_to_string(dir.path().join("out/journal.jsonl")).unwrap();
    assert_eq!(journal.lines().count(), 10, "resume must not duplicate trials");
}

#[test]
fn resume_finishes_an_interrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    let first = run(&["run", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&first), 0);

    // Drop the last three journal lines to simulate a kill.
    let jpath = dir.path().join("out/journal.jsonl");
    let journal = std::fs::read_to_string(&jpath).unwrap();
    let kept: Vec<&str> = journal.lines().take(7).collect();
    std::fs::write(&jpath, format!("{}\n", kept.join("\n"))).unwrap();

    let resume = run(&["run", "--config", "config.json", "--resume"], dir.path());
    assert_eq!(exit_code(&resume), 0, "stderr: {}", stderr(&resume));
    let refilled = std::fs::read_to_string(&jpath).unwrap();
    assert_eq!(refilled.lines().count(), 10, "resume fills only the gap");
}

#[test]
fn missing_credential_fails_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), 40);
    let config = r#"{
        "corpus": { "path": "reviews.csv" },
        "conditions": ["same_standard"],
        "trials_per_condition": 2,
        "output_dir": "out",
        "backends": {
            "same_pair": {
                "kind": "remote",
                "endpoint": "http://127.0.0.1:9/v1/chat/completions",
                "model": "m",
                "credential_env": "DEFERENCE_TEST_ABSENT_KEY"
            },
            "different_pair": {
                "m1": { "kind": "simulated", "initial_center": 0.3, "defer_prob": 0.2, "defer_step": 0.5 },
                "m2": { "kind": "simulated", "initial_center": 0.7, "defer_prob": 0.6, "defer_step": 0.5 }
            }
        }
    }"#;
    std::fs::write(dir.path().join("config.json"), config).unwrap();

    let output = run(&["run", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&output), 1);
    assert!(
        stderr(&output).contains("DEFERENCE_TEST_ABSENT_KEY"),
        "error must name the variable to set; stderr: {}",
        stderr(&output)
    );
    assert!(
        !dir.path().join("out").exists(),
        "a failed preflight must not leave an output directory"
    );
}

#[test]
fn analyze_prints_one_row_per_condition() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    let ran = run(&["run", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&ran), 0);

    let output = run(&["analyze", "--journal", "out"], dir.path());
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let out = stdout(&output);
    assert!(out.contains("| Condition |"), "{out}");
    let rows: Vec<&str> = out
        .lines()
        .filter(|l| l.starts_with("| same_"))
        .collect();
    assert_eq!(rows.len(), 2, "{out}");
    // Two of six conditions → contrasts are skipped with an explanation.
    assert!(
        stderr(&output).contains("contrasts skipped"),
        "stderr: {}",
        stderr(&output)
    );
}

#[test]
fn analyze_warns_about_truncated_journal_lines() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    let ran = run(&["run", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&ran), 0);

    // Chop the final line in half, as a kill mid-append would.
    let jpath = dir.path().join("out/journal.jsonl");
    let journal = std::fs::read_to_string(&jpath).unwrap();
    let keep = journal.len() - 40;
    std::fs::write(&jpath, &journal[..keep]).unwrap();

    let output = run(&["analyze", "--journal", "out"], dir.path());
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    assert!(
        stderr(&output).contains("line 10"),
        "warning should cite the bad line number; stderr: {}",
        stderr(&output)
    );
    assert!(stdout(&output).contains("| Condition |"));
}

#[test]
fn unknown_config_key_is_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), 40);
    let config = r#"{
        "corpus": { "path": "reviews.csv" },
        "api_key": "sk-should-never-be-here",
        "backends": {
            "same_pair": { "kind": "simulated", "initial_center": 0.5, "defer_prob": 0.5, "defer_step": 0.5 },
            "different_pair": {
                "m1": { "kind": "simulated", "initial_center": 0.3, "defer_prob": 0.2, "defer_step": 0.5 },
                "m2": { "kind": "simulated", "initial_center": 0.7, "defer_prob": 0.6, "defer_step": 0.5 }
            }
        }
    }"#;
    std::fs::write(dir.path().join("config.json"), config).unwrap();

    let output = run(&["validate", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&output), 1);
    assert!(
        stderr(&output).contains("api_key"),
        "stderr: {}",
        stderr(&output)
    );
}

#[test]
fn validate_echoes_resolved_settings() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    let output = run(&["validate", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let out = stdout(&output);
    assert!(out.contains("conditions: same_standard, same_equal"), "{out}");
    assert!(out.contains("trials_per_condition: 5"), "{out}");
    assert!(out.contains("all_simulated: true"), "{out}");
    assert!(out.contains("config_digest: "), "{out}");
    assert!(out.contains("config ok"), "{out}");
}

#[test]
fn report_exports_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    let ran = run(&["run", "--config", "config.json"], dir.path());
    assert_eq!(exit_code(&ran), 0);

    let output = run(
        &[
            "report",
            "--journal",
            "out",
            "--out",
            "tables",
            "--format",
            "csv",
            "--format",
            "markdown",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    for file in ["descriptive.csv", "descriptive.md", "manifest.json"] {
        assert!(
            dir.path().join("tables").join(file).is_file(),
            "missing {file}; stdout: {}",
            stdout(&output)
        );
    }
}

#[test]
fn analyze_without_journal_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["analyze", "--journal", "missing-dir"], dir.path());
    assert_eq!(exit_code(&output), 1);
    assert!(
        stderr(&output).contains("no journal found"),
        "stderr: {}",
        stderr(&output)
    );
}

#[test]
fn bad_flags_exit_one_but_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = run(&["run", "--no-such-flag"], dir.path());
    assert_eq!(exit_code(&bad), 1);

    let help = run(&["--help"], dir.path());
    assert_eq!(exit_code(&help), 0);
    assert!(stdout(&help).contains("deference"));
}
