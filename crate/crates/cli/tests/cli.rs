//! End-to-end command behavior: files written, exit codes honored, output
//! schemas stable.

use std::fs;
use std::path::Path;
use std::process::Command;

use cave_cli::{cmd_oracle, cmd_run, cmd_sweep, RunOverrides, EXIT_CONFIG, EXIT_IO, EXIT_OK};
use cave_sim::SchedulerKind;

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn run_writes_tasks_csv_and_summary_json() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("scenario.json");
    write(&config_path, r#"{"duration": 2.0, "seed": 3, "scheduler": "cave"}"#);
    let out = dir.path().join("out");

    let code = cmd_run(Some(&config_path), &out, &RunOverrides::default());
    assert_eq!(code, EXIT_OK);

    let csv = fs::read_to_string(out.join("tasks.csv")).unwrap();
    assert!(csv.starts_with("task_id,arrival_s,latency_s,unreliability,redundancy,outcome\n"));
    assert!(csv.lines().count() > 1);
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"scheduler\": \"cave\""));
    assert!(summary.contains("\"seed\": 3"));
}

#[test]
fn overrides_replace_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let overrides = RunOverrides {
        seed: Some(9),
        scheduler: Some(SchedulerKind::Baseline),
        duration: Some(1.0),
    };
    assert_eq!(cmd_run(None, &out, &overrides), EXIT_OK);
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"scheduler\": \"baseline\""));
    assert!(summary.contains("\"seed\": 9"));
    // single-replica scheduler reports mean redundancy exactly 1
    assert!(summary.contains("\"mean_redundancy\": 1.0"));
}

#[test]
fn same_seed_same_bytes_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = RunOverrides { seed: Some(7), duration: Some(2.0), ..Default::default() };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_eq!(cmd_run(None, &out_a, &overrides), EXIT_OK);
    assert_eq!(cmd_run(None, &out_b, &overrides), EXIT_OK);
    let a = fs::read(out_a.join("tasks.csv")).unwrap();
    let b = fs::read(out_b.join("tasks.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_config_exits_2_and_missing_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = dir.path().join("bad.json");
    write(&bad, r#"{"fail_threshold": 2.0}"#);
    assert_eq!(cmd_run(Some(&bad), &out, &RunOverrides::default()), EXIT_CONFIG);

    let garbled = dir.path().join("garbled.json");
    write(&garbled, "{not json");
    assert_eq!(cmd_run(Some(&garbled), &out, &RunOverrides::default()), EXIT_CONFIG);

    let missing = dir.path().join("missing.json");
    assert_eq!(cmd_run(Some(&missing), &out, &RunOverrides::default()), EXIT_IO);
}

#[test]
fn unwritable_output_directory_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("occupied");
    write(&blocker, "a file, not a directory");
    let overrides = RunOverrides { duration: Some(0.5), ..Default::default() };
    assert_eq!(cmd_run(None, &blocker, &overrides), EXIT_IO);
}

#[test]
fn sweep_emits_one_row_per_scheduler_value_rep() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("sweep.json");
    write(
        &spec_path,
        r#"{
            "parameter": "fail_threshold",
            "values": [0.2, 0.4],
            "repetitions": 2,
            "base": {"duration": 1.0, "seed": 11}
        }"#,
    );
    let out = dir.path().join("out");
    assert_eq!(cmd_sweep(&spec_path, &out), EXIT_OK);

    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "scheduler,param,value,rep,mean_latency_s,p80_latency_s,frac_under_threshold,mean_redundancy"
    );
    assert_eq!(lines.len(), 1 + 3 * 2 * 2);
    assert!(lines[1].starts_with("baseline,fail_threshold,0.2,0,"));
    assert!(lines.last().unwrap().starts_with("fpso_mr,fail_threshold,0.4,1,"));
}

#[test]
fn single_value_single_rep_sweep_has_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("sweep.json");
    write(
        &spec_path,
        r#"{"parameter": "arrival_intensity", "values": [20.0], "repetitions": 1,
            "base": {"duration": 0.5, "seed": 2}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(cmd_sweep(&spec_path, &out), EXIT_OK);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn malformed_sweep_spec_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("sweep.json");
    write(&spec_path, r#"{"parameter": "spawn_radius", "values": [1.0], "repetitions": 1}"#);
    assert_eq!(cmd_sweep(&spec_path, dir.path()), EXIT_CONFIG);
}

#[test]
fn allocation_oracle_suite_passes_from_the_cli() {
    assert_eq!(cmd_oracle("allocation"), EXIT_OK);
}

#[test]
fn binary_reports_usage_errors_with_exit_2() {
    let exe = env!("CARGO_BIN_EXE_cave");

    let out = Command::new(exe).arg("oracle").arg("nonsense").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(exe)
        .args(["run", "--scheduler", "bogus", "--duration", "0.1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(exe).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "bare invocation should print usage");
}

#[test]
fn binary_run_round_trips() {
    let exe = env!("CARGO_BIN_EXE_cave");
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(exe)
        .args(["run", "--duration", "1.0", "--seed", "5", "--scheduler", "fpso_mr"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("tasks.csv").exists());
    assert!(out_dir.join("summary.json").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fpso_mr"), "stdout: {stdout}");
}
