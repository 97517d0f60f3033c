//! End-to-end checks of the `alr-lab` binary: artifact layout, exit codes,
//! and error message quality.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alr-lab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).expect("test file writes");
}

fn tiny_config(method_fields: &str, output_dir: &str) -> String {
    format!(
        r#"{{
  "method": {method_fields},
  "dataset": {{"synth": {{
    "dim": 1,
    "means": [[-3.0], [3.0]],
    "stds": [1.0, 1.0],
    "train_per_class": 24,
    "test_per_class": 12
  }}}},
  "output_dir": "{output_dir}",
  "epochs": 3,
  "batch_size": 16,
  "seed": 9,
  "snapshot_epochs": [1, 3]
}}"#
    )
}

#[test]
fn train_writes_the_expected_artifacts() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "cfg.json", &tiny_config("\"alr\"", "out"));
    let out = run(&["train", "-c", "cfg.json"], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("out");
    for name in ["metrics.csv", "summary.json", "S_epoch1.csv", "S_epoch1.pgm", "S_epoch3.csv", "S_epoch3.pgm"] {
        assert!(dir.join(name).is_file(), "missing {name}");
    }
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with(
        "epoch,train_acc,test_acc,loss_hard,loss_res,loss_upd,loss_total,res_weight,mean_row_entropy\n"
    ));
    assert_eq!(metrics.lines().count(), 4); // header + 3 epochs
}

#[test]
fn baseline_run_reports_zeroed_residual_columns() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "cfg.json", &tiny_config("\"baseline\"", "out"));
    let out = run(&["train", "-c", "cfg.json"], tmp.path());
    assert!(out.status.success());

    let dir = tmp.path().join("out");
    // No residual matrix, no snapshots.
    assert!(!dir.join("S_epoch1.csv").exists());
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    for line in metrics.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(&cells[4..6], &["0", "0"], "loss_res/loss_upd: {line}");
        assert_eq!(&cells[7..9], &["0", "0"], "res_weight/entropy: {line}");
    }
    let summary = fs::read_to_string(dir.join("summary.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(json["param_overhead"], 0);
}

#[test]
fn unknown_config_key_is_a_field_level_error() {
    let tmp = TempDir::new().unwrap();
    let config = tiny_config("\"baseline\"", "out").replace("\"epochs\"", "\"epocs\"");
    write(tmp.path(), "cfg.json", &config);
    let out = run(&["train", "-c", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("epocs"), "stderr: {stderr}");
}

#[test]
fn missing_required_field_names_the_field() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "cfg.json",
        r#"{"method": "baseline", "dataset": {"csv": {"test": "t.csv"}}, "output_dir": "out"}"#,
    );
    let out = run(&["train", "-c", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("train"), "stderr: {stderr}");
}

#[test]
fn nonexistent_dataset_file_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "cfg.json",
        r#"{"method": "baseline", "dataset": {"csv": {"train": "none.csv", "test": "none.csv"}}, "output_dir": "out"}"#,
    );
    let out = run(&["train", "-c", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("none.csv"));
}

#[test]
fn malformed_json_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "cfg.json", "{not json");
    let out = run(&["train", "-c", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn smoothing_on_a_non_smoothing_method_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let config = tiny_config("\"alr\"", "out")
        .replace("\"epochs\": 3,", "\"epochs\": 3, \"smoothing\": 0.1,");
    write(tmp.path(), "cfg.json", &config);
    let out = run(&["train", "-c", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("smoothing"));
}

#[test]
fn kd_requires_its_section_and_runs_with_it() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bare.json", &tiny_config("\"kd\"", "out1"));
    let out = run(&["train", "-c", "bare.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kd"));

    let config = tiny_config("\"kd\"", "out2").replace(
        "\"epochs\": 3,",
        "\"epochs\": 3, \"kd\": {\"alpha\": 0.4, \"temperature\": 2.0, \
         \"soft_targets\": {\"inline\": [[0.9, 0.1], [0.1, 0.9]]}},",
    );
    write(tmp.path(), "kd.json", &config);
    let out = run(&["train", "-c", "kd.json"], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_rejects_an_unknown_method() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "cfg.json", &tiny_config("\"baseline\"", "out"));
    let out = run(
        &["compare", "-c", "cfg.json", "--methods", "baseline,vaporware", "--seeds", "1"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vaporware"));
}

#[test]
fn compare_writes_one_row_per_method_with_single_seed_std_zero() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "cfg.json", &tiny_config("\"baseline\"", "cmp"));
    let out = run(
        &["compare", "-c", "cfg.json", "--methods", "baseline,alr", "--seeds", "5"],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("cmp/compare.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,seeds,mean_test_acc,std_test_acc");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("baseline,1,"));
    assert!(lines[1].ends_with(",0"), "single-seed std must be 0: {}", lines[1]);
    assert!(lines[2].starts_with("alr,1,"));
    assert!(tmp.path().join("cmp/baseline/seed5/metrics.csv").is_file());
    assert!(tmp.path().join("cmp/alr/seed5/summary.json").is_file());
}

#[test]
fn gradcheck_passes_and_lists_every_loss_term() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["gradcheck"], tmp.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["hard", "soft", "kd_total", "res", "upd", "end_to_end"] {
        assert!(stdout.contains(name), "missing row {name}: {stdout}");
    }
}

#[test]
fn gradcheck_corrupt_hook_fails_with_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["gradcheck", "--corrupt"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hard"));
}

#[test]
fn kd_demo_prints_the_worked_example() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["kd-demo"], tmp.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("-0.3"));
    assert!(stdout.contains("0.1"));
    assert!(stdout.contains("[0.8, 0.15, 0.05]"));
    assert!(stdout.contains("[1, 0, 0]"));
}

#[test]
fn export_heatmap_requires_existing_snapshots() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "cfg.json", &tiny_config("\"alr\"", "run"));
    assert!(run(&["train", "-c", "cfg.json"], tmp.path()).status.success());

    let ok = run(&["export-heatmap", "-r", "run", "-e", "1,3"], tmp.path());
    assert!(ok.status.success(), "stderr: {}", String::from_utf8_lossy(&ok.stderr));
    for name in ["entropy.csv", "heatmap_epoch1.csv", "heatmap_epoch1.pgm", "heatmap_epoch3.csv"] {
        assert!(tmp.path().join("run").join(name).is_file(), "missing {name}");
    }

    let missing = run(&["export-heatmap", "-r", "run", "-e", "2"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("epoch 2"));
}

#[test]
fn export_heatmap_outside_a_run_directory_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["export-heatmap", "-r", "nowhere", "-e", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["no-such-command"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["train"], tmp.path()); // missing -c
    assert_eq!(out.status.code(), Some(2));
}
