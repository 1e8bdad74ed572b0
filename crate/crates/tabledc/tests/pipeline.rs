//! File-level and process-level harness tests: output contracts, config
//! echo replay, format handling, and CLI behavior including error codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tabledc::harness::synth::gaussian_blobs;
use tabledc::harness::{io, run_pipeline, MatrixFormat, RunConfig};
use tabledc::linalg::Matrix;
use tabledc::rng::RngState;

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("tabledc-pipeline").join(name);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_dataset(dir: &Path, seed: u64) -> (String, String) {
    let mut rng = RngState::new(seed);
    let (x, labels) = gaussian_blobs(90, 10, 3, 8.0, 0.7, &mut rng);
    let input = dir.join("x.csv");
    let truth = dir.join("y.txt");
    io::save_matrix_csv(&input, &x).unwrap();
    io::save_labels(&truth, &labels).unwrap();
    (input.display().to_string(), truth.display().to_string())
}

fn small_config(input: String, labels: Option<String>, out: String) -> RunConfig {
    let mut cfg = RunConfig::new(input, 3);
    cfg.labels = labels;
    cfg.out = out;
    cfg.hidden_dims = Some(vec![12, 5]);
    cfg.pretrain_epochs = Some(6);
    cfg.epochs = Some(7);
    cfg.seed = 42;
    cfg
}

#[test]
fn pipeline_writes_all_outputs_with_metrics() {
    let dir = temp_dir("outputs");
    let (input, truth) = small_dataset(&dir, 1);
    let cfg = small_config(input, Some(truth), dir.join("run").display().to_string());
    let report = run_pipeline(&cfg).unwrap();

    assert!(Path::new(&report.files.report).exists());
    assert!(Path::new(&report.files.losses).exists());
    assert!(Path::new(&report.files.labels).exists());
    assert!(report.metrics.is_some());
    assert_eq!(report.n, 90);
    assert_eq!(report.d, 10);

    // pinned loss-curve schema: header plus exactly `epochs` rows
    let losses = fs::read_to_string(&report.files.losses).unwrap();
    let mut lines = losses.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epoch,re_loss,ce_loss,total_loss,kl_p_m"
    );
    assert_eq!(lines.count(), 7);

    // labels file has one integer per instance
    let labels = io::load_labels(&report.files.labels).unwrap();
    assert_eq!(labels.len(), 90);

    // the report on disk parses and carries the same metrics
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report.files.report).unwrap()).unwrap();
    assert!(parsed["metrics"]["ari"].is_number());
    assert!(parsed["timings"]["pretrain_seconds"].is_number());
    assert_eq!(parsed["config"]["epochs"], 7);
}

#[test]
fn pipeline_without_labels_omits_metrics() {
    let dir = temp_dir("nolabels");
    let (input, _) = small_dataset(&dir, 2);
    let cfg = small_config(input, None, dir.join("run").display().to_string());
    let report = run_pipeline(&cfg).unwrap();
    assert!(report.metrics.is_none());
    assert!(Path::new(&report.files.labels).exists());
    assert!(Path::new(&report.files.losses).exists());

    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report.files.report).unwrap()).unwrap();
    assert!(
        parsed.get("metrics").is_none(),
        "metrics key should be absent without ground truth"
    );
}

#[test]
fn echoed_config_replays_the_run_exactly() {
    let dir = temp_dir("echo");
    let (input, truth) = small_dataset(&dir, 3);
    let cfg = small_config(input, Some(truth), dir.join("first").display().to_string());
    let report = run_pipeline(&cfg).unwrap();
    let labels_first = fs::read(&report.files.labels).unwrap();

    // extract the echoed config from the on-disk report and re-run it
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report.files.report).unwrap()).unwrap();
    let config_path = dir.join("echoed.json");
    fs::write(&config_path, parsed["config"].to_string()).unwrap();

    let mut replay = RunConfig::from_file(&config_path).unwrap();
    replay.out = dir.join("second").display().to_string();
    let report2 = run_pipeline(&replay).unwrap();
    let labels_second = fs::read(&report2.files.labels).unwrap();
    assert_eq!(labels_first, labels_second);
}

#[test]
fn binary_format_feeds_the_pipeline() {
    let dir = temp_dir("binary");
    let mut rng = RngState::new(4);
    let (x, labels) = gaussian_blobs(60, 8, 2, 8.0, 0.6, &mut rng);
    let input = dir.join("x.bin");
    io::save_matrix_binary(&input, &x).unwrap();
    let truth = dir.join("y.txt");
    io::save_labels(&truth, &labels).unwrap();

    let mut cfg = small_config(
        input.display().to_string(),
        Some(truth.display().to_string()),
        dir.join("run").display().to_string(),
    );
    cfg.k = 2;
    cfg.format = MatrixFormat::Bin;
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.n, 60);
    assert_eq!(report.d, 8);
}

#[test]
fn ablation_records_cell_failures_and_continues() {
    let dir = temp_dir("cell-failure");
    let (input, truth) = small_dataset(&dir, 12);
    let mut cfg = small_config(
        input,
        Some(truth),
        dir.join("grid").display().to_string(),
    );
    cfg.pretrain_epochs = Some(4);
    cfg.epochs = Some(4);
    // a vanishing bandwidth underflows the Normal kernel at Mahalanobis
    // scale, killing every column of that one cell; the polynomial-tail
    // kernels survive it
    cfg.gamma = 0.001;

    let report = tabledc::harness::ablate(&cfg).unwrap();
    assert_eq!(report.cells.len(), 9);
    let failed: Vec<&str> = report
        .cells
        .iter()
        .filter(|c| c.error.is_some())
        .map(|c| c.cell.as_str())
        .collect();
    assert_eq!(failed, vec!["normal"], "exactly the normal cell dies");
    let normal = report.cells.iter().find(|c| c.cell == "normal").unwrap();
    assert!(normal.error.as_deref().unwrap().contains("DegenerateColumn"));
    assert!(normal.ari.is_none());

    // the failed cell still has its row in the CSV, error column filled
    let csv = fs::read_to_string(&report.csv).unwrap();
    assert_eq!(csv.lines().count(), 10);
    let row = csv
        .lines()
        .find(|l| l.starts_with("kernel,normal"))
        .unwrap();
    assert!(row.contains("DegenerateColumn"));
}

#[test]
fn mismatched_labels_fail_in_the_load_phase() {
    let dir = temp_dir("mismatch");
    let (input, _) = small_dataset(&dir, 5);
    let short = dir.join("short.txt");
    io::save_labels(&short, &[0, 1, 0]).unwrap();
    let cfg = small_config(
        input,
        Some(short.display().to_string()),
        dir.join("run").display().to_string(),
    );
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.phase, "load");
    assert_eq!(err.code(), "LengthMismatch");
}

// ---- process-level tests against the real binary ----

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tabledc"))
}

#[test]
fn cli_train_runs_end_to_end_and_is_deterministic() {
    let dir = temp_dir("cli-train");
    let (input, truth) = small_dataset(&dir, 6);

    let run = |out: &str| {
        let output = binary()
            .args([
                "train",
                "--input",
                &input,
                "--labels",
                &truth,
                "--k",
                "3",
                "--hidden-dims",
                "12,5",
                "--pretrain-epochs",
                "5",
                "--epochs",
                "6",
                "--seed",
                "7",
                "--out",
                &dir.join(out).display().to_string(),
            ])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        let summary: serde_json::Value =
            serde_json::from_slice(&output.stdout).expect("stdout is a JSON summary");
        assert!(summary["metrics"]["ari"].is_number());
        fs::read(dir.join(out).join("labels.txt")).unwrap()
    };

    let a = run("a");
    let b = run("b");
    assert_eq!(a, b, "same seed must give byte-identical labels");
}

#[test]
fn cli_reports_machine_readable_errors() {
    let dir = temp_dir("cli-errors");
    let ragged = dir.join("ragged.csv");
    fs::write(&ragged, "1,2\n3\n").unwrap();

    let output = binary()
        .args([
            "train",
            "--input",
            &ragged.display().to_string(),
            "--k",
            "2",
            "--out",
            &dir.join("run").display().to_string(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_slice(&output.stderr).expect("stderr is a JSON error object");
    assert_eq!(err["error"]["phase"], "load");
    assert_eq!(err["error"]["code"], "RaggedRows");

    // unknown subcommands are usage errors with a distinct exit code
    let output = binary().arg("explode").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn cli_evaluate_scores_label_files() {
    let dir = temp_dir("cli-eval");
    let truth = dir.join("truth.txt");
    let pred = dir.join("pred.txt");
    io::save_labels(&truth, &[0, 0, 1, 1]).unwrap();
    io::save_labels(&pred, &[1, 1, 0, 0]).unwrap();

    let output = binary()
        .args([
            "evaluate",
            "--pred",
            &pred.display().to_string(),
            "--labels",
            &truth.display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["ari"], 1.0);
    assert_eq!(report["acc"], 1.0);
    assert_eq!(report["unary_clusters"], 0);
    assert_eq!(report["k_predicted"], 2);
}

#[test]
fn cli_pretrain_snapshot_feeds_train() {
    let dir = temp_dir("cli-snapshot");
    let (input, truth) = small_dataset(&dir, 8);

    let pre_out = dir.join("pre");
    let output = binary()
        .args([
            "pretrain",
            "--input",
            &input,
            "--k",
            "3",
            "--hidden-dims",
            "12,5",
            "--pretrain-epochs",
            "6",
            "--seed",
            "9",
            "--out",
            &pre_out.display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let snapshot = summary["ae_state"].as_str().unwrap().to_string();
    assert!(Path::new(&snapshot).exists());
    assert!(pre_out.join("pretrain_losses.csv").exists());

    let output = binary()
        .args([
            "train",
            "--input",
            &input,
            "--labels",
            &truth,
            "--k",
            "3",
            "--ae-state",
            &snapshot,
            "--epochs",
            "5",
            "--seed",
            "9",
            "--out",
            &dir.join("train").display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn cli_config_file_with_flag_overrides() {
    let dir = temp_dir("cli-config");
    let (input, truth) = small_dataset(&dir, 10);
    let config_path = dir.join("run.json");
    fs::write(
        &config_path,
        serde_json::json!({
            "input": input,
            "labels": truth,
            "k": 3,
            "hidden_dims": [12, 5],
            "pretrain_epochs": 4,
            "epochs": 99,
            "seed": 3,
            "out": dir.join("ignored").display().to_string(),
        })
        .to_string(),
    )
    .unwrap();

    // --epochs and --out must override the file keys
    let out = dir.join("actual");
    let output = binary()
        .args([
            "train",
            "--config",
            &config_path.display().to_string(),
            "--epochs",
            "5",
            "--out",
            &out.display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let losses = fs::read_to_string(out.join("losses.csv")).unwrap();
    assert_eq!(
        losses.lines().count(),
        6,
        "header plus five override epochs"
    );
    assert!(!dir.join("ignored").exists());
}

#[test]
fn cli_ablate_and_bench_scale_emit_their_csvs() {
    let dir = temp_dir("cli-grids");
    let (input, truth) = small_dataset(&dir, 11);

    let out = dir.join("ablation");
    let output = binary()
        .args([
            "ablate",
            "--input",
            &input,
            "--labels",
            &truth,
            "--k",
            "3",
            "--hidden-dims",
            "12,5",
            "--pretrain-epochs",
            "4",
            "--epochs",
            "4",
            "--gamma",
            "10",
            "--seed",
            "2",
            "--out",
            &out.display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let csv = fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert!(csv.starts_with("group,cell,distance,kernel,init,ari,acc,error"));
    assert_eq!(csv.lines().count(), 10, "header plus nine cells");

    let out = dir.join("bench");
    let output = binary()
        .env("TABLEDC_HW_GPU", "none")
        .args([
            "bench-scale",
            "--k-grid",
            "4,8",
            "--bench-n",
            "120",
            "--bench-d",
            "10",
            "--hidden-dims",
            "12,5",
            "--pretrain-epochs",
            "2",
            "--warmup",
            "1",
            "--measure",
            "2",
            "--seed",
            "2",
            "--out",
            &out.display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let csv = fs::read_to_string(out.join("scalability.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "k,seconds_per_epoch");
    assert_eq!(lines.count(), 2);

    // hardware description fields come from the environment
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["hardware"]["gpu"], "none");
}

#[test]
fn library_binary_matrix_roundtrip_from_csv_source() {
    // parity between the two formats: a csv-loaded matrix written as
    // binary and reloaded matches at 32-bit precision
    let dir = temp_dir("format-parity");
    let csv = dir.join("m.csv");
    fs::write(&csv, "1.5,2.25\n-3.125,4.0\n").unwrap();
    let a = io::load_matrix(&csv, MatrixFormat::Csv, false).unwrap();
    let bin = dir.join("m.bin");
    io::save_matrix_binary(&bin, &a).unwrap();
    let b = io::load_matrix(&bin, MatrixFormat::Bin, false).unwrap();
    assert_eq!(a.data(), b.data());

    let wide = Matrix::new(1, 2, vec![0.1, 0.2]).unwrap();
    io::save_matrix_binary(&bin, &wide).unwrap();
    let narrowed = io::load_matrix(&bin, MatrixFormat::Bin, false).unwrap();
    for (w, n) in wide.data().iter().zip(narrowed.data()) {
        assert_eq!(*w as f32 as f64, *n, "narrowing is the only loss");
    }
}
