use std::path::PathBuf;
use std::process::Command;

use zdlab::scenario::parse_report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zdlab"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn stdout(args: &[&str], file: &str) -> (i32, String, String) {
    let out = bin().args(args).arg(scenario(file)).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn run_prints_rule_ids_and_exits_zero() {
    let (code, text, _) = stdout(&["run"], "right-collision.toml");
    assert_eq!(code, 0);
    assert!(text.contains("Thm-Anurag31"));
    assert!(text.contains("verified: true"));
}

#[test]
fn structured_output_parses_back() {
    let (code, text, _) = stdout(&["--format", "structured", "run"], "left-block.toml");
    assert_eq!(code, 0);
    let report = parse_report(&text).unwrap();
    assert_eq!(report.scenario, "left-block");
    assert!(report.passed);
}

#[test]
fn classify_synthesizes_tasks_when_the_scenario_has_none() {
    let (code, text, _) = stdout(&["--format", "structured", "classify"], "identity-strong.toml");
    assert_eq!(code, 0);
    let report = parse_report(&text).unwrap();
    let kinds: Vec<&str> = report.tasks.iter().map(|t| t.kind.as_str()).collect();
    assert_eq!(kinds, ["classify_left", "classify_right", "classify_zd"]);
}

#[test]
fn classify_keeps_only_matching_tasks() {
    let (_, text, _) = stdout(&["--format", "structured", "classify", "--question", "left"], "left-square.toml");
    let report = parse_report(&text).unwrap();
    assert_eq!(report.tasks.len(), 1);
    assert_eq!(report.tasks[0].kind, "classify_left");
}

#[test]
fn witness_subcommand_honours_side() {
    let (code, text, _) = stdout(&["--format", "structured", "witness", "--side", "right"], "left-block.toml");
    assert_eq!(code, 0);
    let report = parse_report(&text).unwrap();
    assert_eq!(report.tasks[0].witnesses[0].witness.side.to_string(), "right");
}

#[test]
fn witness_on_a_non_divisor_exits_nonzero() {
    let (code, text, _) = stdout(&["witness", "--side", "left"], "left-injective.toml");
    assert_eq!(code, 1);
    assert!(text.contains("error"));
}

#[test]
fn n_max_flag_overrides_tasks() {
    let (code, text, _) = stdout(&["--n-max", "5", "--format", "structured", "tdz"], "diagonal-c0.toml");
    assert_eq!(code, 0);
    let report = parse_report(&text).unwrap();
    assert_eq!(report.tasks[0].tables[0].rows.len(), 5);
}

#[test]
fn csv_files_are_written_to_out_dir() {
    let dir = std::env::temp_dir().join(format!("zdlab-cli-{}", std::process::id()));
    let out = bin()
        .args(["--format", "csv", "--out"])
        .arg(&dir)
        .arg("norm")
        .arg(scenario("norms.toml"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let norms = std::fs::read_to_string(dir.join("norms-task1-norms.csv")).unwrap();
    assert!(norms.starts_with("n,lower,upper,method\n9,"));
    assert!(dir.join("norms-summary.csv").exists());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn schema_errors_exit_two_with_line() {
    let dir = std::env::temp_dir().join(format!("zdlab-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("bad.toml");
    std::fs::write(
        &file,
        "id = \"bad\"\n[space]\nkind = \"atomic\"\natoms = [{ id = \"a\", mass = \"-1/2\" }]\n",
    )
    .unwrap();
    let out = bin().arg("run").arg(&file).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":4:") && err.contains("NEGATIVE_MASS"), "{err}");
    std::fs::remove_dir_all(dir).unwrap();
}
