use std::path::{Path, PathBuf};

use clap::Parser;
use scarseg::vio::{read_json, read_mask};
use scarseg_cli::{run, Cli, CliError, Prediction};
use serde_json::{json, Value};

fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

fn small_config(healthy: usize, diseased: usize) -> Value {
    json!({
        "manifests": ["out/phantom"],
        "out_dir": "out",
        "phantom": {"spec": {"dims": [96, 96, 2]}, "healthy": healthy, "diseased": diseased},
        "detect": {
            "arch": {"input_side": 89, "stages": [{"filters": 2, "kernel": 5}, {"filters": 2, "kernel": 3}, {"filters": 4, "kernel": 3}], "hidden": 8, "dropout": 0.5, "classes": 2},
            "train": {"epochs": 1}
        },
        "refine": {
            "arch": {"input_side": 49, "stages": [{"filters": 2, "kernel": 5}, {"filters": 4, "kernel": 3}, {"filters": 4, "kernel": 3}], "hidden": 8, "dropout": 0.5, "classes": 2},
            "train": {"epochs": 1, "batch_size": 32},
            "members": 1,
            "max_patches_per_case": 40
        }
    })
}

fn cmd(args: &[&str], config: &Path) -> i32 {
    let mut v = vec!["scarseg"];
    v.extend_from_slice(args);
    v.extend(["--config", config.to_str().unwrap()]);
    run(v)
}

#[test]
fn missing_manifest_path_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), &json!({"manifests": ["nowhere/case.json"]}));
    assert_eq!(cmd(&["segment", "--no-detect", "--no-refine"], &c), 1);
}

#[test]
fn bad_config_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("config.json");
    std::fs::write(&c, "{ not json").unwrap();
    assert_eq!(cmd(&["segment"], &c), 1);
    let c = write_config(dir.path(), &json!({"no_such_key": 1}));
    assert_eq!(cmd(&["segment"], &c), 1);
    assert_eq!(run(["scarseg", "frobnicate"]), 1);
    assert_eq!(run(["scarseg", "segment", "--jobs", "many"]), 1);
    assert_eq!(run(["scarseg", "--help"]), 0);
}

#[test]
fn error_classes_map_to_exit_codes() {
    assert_eq!(CliError::usage("x").exit_code(), 1);
    assert_eq!(CliError::Core(scarseg::Error::Divergence { epoch: 3 }).exit_code(), 3);
    assert_eq!(CliError::Core(scarseg::Error::ZeroVariance).exit_code(), 3);
    assert_eq!(CliError::Core(scarseg::Error::Spec("bad".into())).exit_code(), 1);
    assert_eq!(CliError::Core(scarseg::Error::SingleClass).exit_code(), 2);
    let line = CliError::usage("two\nlines").stderr_line();
    assert!(!line.contains('\n'));
    assert!(line.starts_with("error code=1 kind=usage message="));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), &json!({"seeds": {"phantom": 9}, "pipeline": {"mvo": true}}));
    let cli = Cli::try_parse_from(["scarseg", "segment", "--config", c.to_str().unwrap(), "--seed", "42", "--no-mvo", "--out", "/tmp/x"]).unwrap();
    let cfg = cli.effective_config().unwrap();
    assert_eq!([cfg.seeds.phantom, cfg.seeds.detect, cfg.seeds.refine, cfg.seeds.splits], [42; 4]);
    assert!(!cfg.pipeline.mvo);
    assert!(cfg.pipeline.detect && cfg.pipeline.refine);
    assert_eq!(cfg.out_dir(), PathBuf::from("/tmp/x"));
    assert_eq!(cfg.model_dir(), PathBuf::from("/tmp/x/models"));
}

#[test]
fn relative_paths_resolve_against_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), &json!({"out_dir": "results", "manifests": ["cases"]}));
    let cfg = scarseg_cli::RunConfig::load(&c).unwrap();
    assert_eq!(cfg.out_dir(), dir.path().join("results"));
    assert_eq!(cfg.manifests, vec![dir.path().join("cases")]);
}

#[test]
fn coarse_only_pipeline_writes_masks_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), &small_config(1, 2));
    assert_eq!(cmd(&["phantom", "gen"], &c), 0);
    assert_eq!(cmd(&["segment", "--no-detect", "--no-refine", "--no-mvo"], &c), 0);
    let seg = dir.path().join("out/segment");
    let pred: Prediction = read_json(&seg.join("phantom_0002_pred.json")).unwrap();
    let hyper = read_mask(&seg.join(pred.hyper.unwrap())).unwrap();
    let mvo = read_mask(&seg.join(pred.mvo.unwrap())).unwrap();
    let fin = read_mask(&seg.join(&pred.final_mask)).unwrap();
    let coarse = read_mask(&seg.join(pred.coarse.unwrap())).unwrap();
    assert!(!mvo.any());
    assert_eq!(fin, hyper);
    assert_eq!(fin, coarse);
    assert!(fin.any());

    let report = scarseg::vio::read_report(&seg.join("segment_report.csv")).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.rows.iter().all(|r| r.method == "proposed" && r.scar_volume_cm3.is_some()));

    let prov: Value = read_json(&seg.join("provenance.json")).unwrap();
    assert_eq!(prov["command"], "segment");
    assert_eq!(prov["config_sha256"].as_str().unwrap().len(), 64);
    let arts = prov["artifacts"].as_array().unwrap();
    let report_entry = arts.iter().find(|a| a["path"] == "segment_report.csv").unwrap();
    let bytes = std::fs::read(seg.join("segment_report.csv")).unwrap();
    assert_eq!(report_entry["sha256"], scarseg_cli::provenance::sha256_hex(&bytes));
}

#[test]
fn healthy_case_with_detection_gate_gives_empty_masks() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), &small_config(3, 3));
    assert_eq!(cmd(&["phantom", "gen"], &c), 0);
    assert_eq!(cmd(&["train", "detect"], &c), 0);
    // A detector that calls every slice healthy.
    let model_path = dir.path().join("out/models/detect.json");
    let mut model: Value = read_json(&model_path).unwrap();
    model["threshold"] = json!(1e300);
    std::fs::write(&model_path, serde_json::to_vec(&model).unwrap()).unwrap();

    let mut cfg = small_config(3, 3);
    cfg["manifests"] = json!(["out/phantom/phantom_0001.json"]);
    let c = write_config(dir.path(), &cfg);
    assert_eq!(cmd(&["segment", "--no-refine"], &c), 0);
    let fin = read_mask(&dir.path().join("out/segment/phantom_0001_final.mhd")).unwrap();
    assert!(!fin.any());
}

#[test]
fn segment_without_models_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), &small_config(1, 1));
    assert_eq!(cmd(&["phantom", "gen"], &c), 0);
    assert_eq!(cmd(&["segment"], &c), 1);
    assert_eq!(cmd(&["segment", "--no-detect"], &c), 1);
    assert_eq!(cmd(&["evaluate"], &c), 1);
}

#[test]
fn baselines_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), &small_config(1, 2));
    assert_eq!(cmd(&["phantom", "gen"], &c), 0);
    assert_eq!(cmd(&["baselines"], &c), 0);
    let report = scarseg::vio::read_report(&dir.path().join("out/baselines/baselines_report.csv")).unwrap();
    assert_eq!(report.rows.len(), 3 * 9);
    assert_eq!(cmd(&["evaluate"], &c), 0);
    let summary: Value = read_json(&dir.path().join("out/evaluate/evaluation_summary.json")).unwrap();
    assert_eq!(summary["methods"].as_array().unwrap().len(), 9);
    assert_eq!(summary["pairwise"].as_array().unwrap().len(), 36);
}

#[test]
fn cross_validated_segment_and_permtest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(3, 3);
    cfg["protocol"] = json!({"cv_folds": 3, "permutations": 2});
    let c = write_config(dir.path(), &cfg);
    assert_eq!(cmd(&["phantom", "gen"], &c), 0);
    assert_eq!(cmd(&["segment", "--no-detect"], &c), 0);
    assert!(dir.path().join("out/segment/phantom_0006_final.mhd").exists());
    assert_eq!(cmd(&["permtest"], &c), 0);
    let csv = std::fs::read_to_string(dir.path().join("out/permtest/permtest.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "split,auc_unpermuted,auc_permuted");
    assert_eq!(csv.lines().count(), 3);
    let summary: Value = read_json(&dir.path().join("out/permtest/permtest_summary.json")).unwrap();
    assert!(summary["p"].as_f64().is_some());
    assert_eq!(summary["auc_unpermuted"]["n"], 2);
}
