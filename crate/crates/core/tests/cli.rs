//! The command-line tool: exit codes, outputs and determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nahmlab"))
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn flat(extra: Value) -> Value {
    let ends = json!({"blocks": [{"xi": [0.1, 0.2, 0.3], "su2": [1]}, {"xi": [0.6, 0.7, 0.4], "su2": [1]}]});
    let mut cfg = json!({
        "lattice": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        "plus": ends,
        "minus": ends,
        "solver": {"grid_n": 401},
        "transform": {"xi_grid": 3, "refine": 1},
        "weights": {"levels": 4, "drum_scale": 0.0, "decay_distances": [0.1]},
        "seed": 5
    });
    if let (Some(base), Some(add)) = (cfg.as_object_mut(), extra.as_object()) {
        for (k, v) in add {
            base.insert(k.clone(), v.clone());
        }
    }
    cfg
}

fn run(args: &[&str], config: &Path, out: &Path) -> i32 {
    let status = bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap();
    status.status.code().expect("exit code")
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn full_run_succeeds_and_records_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.json", &flat(json!({})));
    let out = dir.path().join("out");
    for stage in ["validate", "solve", "transform", "weights", "report"] {
        assert_eq!(run(&[stage], &cfg, &out), 0, "{stage}");
    }
    let manifest = read(&out.join("manifest.json"));
    let stages: Vec<&str> = manifest["stages"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(stages, ["validate", "solve", "transform", "weights", "report"]);
    let hash = manifest["config_hash"].as_str().unwrap();
    for f in ["validation.json", "solve.json", "transform.json", "weights.json"] {
        assert_eq!(read(&out.join(f))["manifest"], hash, "{f}");
    }
    let samples = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    assert!(samples.starts_with("xi1,xi2,xi3,status,rank,plus_dim,certified,"));
    assert_eq!(samples.lines().count(), 1 + 27);
    let report = read(&out.join("report.json"));
    assert!(report["failed_stages"].as_array().unwrap().is_empty());
}

#[test]
fn invalid_configs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut bad = flat(json!({}));
    bad["plus"] = json!({"blocks": [{"xi": [0.1, 0.2, 0.3], "su2": [1]}]});
    let cfg = write_config(dir.path(), "bad.json", &bad);
    assert_eq!(run(&["validate"], &cfg, &out), 2);
    let v = read(&out.join("validation.json"));
    assert_eq!(v["valid"], false);
    assert!(v["violations"][0].as_str().unwrap().contains("rank"));
    assert_eq!(run(&["solve"], &cfg, &out), 2);

    std::fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
    assert_eq!(run(&["validate"], &dir.path().join("broken.json"), &out), 2);
    let unknown = write_config(dir.path(), "unknown.json", &flat(json!({"colour": "blue"})));
    assert_eq!(run(&["validate"], &unknown, &out), 2);
}

#[test]
fn non_flat_ends_have_no_solution() {
    let dir = tempfile::tempdir().unwrap();
    let ends = json!({"blocks": [{"xi": [0.25, 0.5, 0.125], "su2": [2]}]});
    let cfg = write_config(dir.path(), "spin.json", &flat(json!({"plus": ends, "minus": ends})));
    let out = dir.path().join("out");
    assert_eq!(run(&["solve"], &cfg, &out), 3);
    assert_eq!(read(&out.join("solve.json"))["found"], false);
    assert_eq!(run(&["transform"], &cfg, &out), 3);
    assert_eq!(run(&["report"], &cfg, &out), 0);
    let failed = read(&out.join("report.json"))["failed_stages"].clone();
    assert_eq!(failed, json!(["solve", "transform"]));
}

#[test]
fn transform_without_curve_and_point_outside_sing_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.json", &flat(json!({})));
    let out = dir.path().join("out");
    assert_eq!(run(&["transform"], &cfg, &out), 2);
    assert_eq!(run(&["weights", "--point", "0.5,0.5,0.5"], &cfg, &out), 2);
    assert_eq!(run(&["weights", "--point", "0.1,0.2,0.3"], &cfg, &out), 0);
    assert_eq!(read(&out.join("weights.json"))["points"].as_array().unwrap().len(), 1);
}

#[test]
fn unresolvable_kernels_exit_with_certification_code() {
    let dir = tempfile::tempdir().unwrap();
    // A step target this small needs more shooting intervals than allowed.
    let cfg = write_config(dir.path(), "fine.json", &flat(json!({"transform": {"xi_grid": 3, "step_norm": 1e-5}})));
    let out = dir.path().join("out");
    assert_eq!(run(&["solve"], &cfg, &out), 0);
    assert_eq!(run(&["transform"], &cfg, &out), 4);
}

#[test]
fn reruns_are_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.json", &flat(json!({"cache": false})));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        for stage in ["solve", "transform", "weights"] {
            assert_eq!(run(&[stage, "--threads", threads], &cfg, out), 0);
        }
    }
    for f in ["curve.json", "solve.json", "samples.csv", "eigenvalues.csv", "bogomolny.csv", "transform.json", "weights.json", "rays.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // A different seed changes the ray directions.
    let c = dir.path().join("c");
    assert_eq!(run(&["weights", "--seed", "6"], &cfg, &c), 0);
    assert_ne!(std::fs::read(a.join("rays.csv")).unwrap(), std::fs::read(c.join("rays.csv")).unwrap());
}

#[test]
fn cached_transform_matches_fresh_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.json", &flat(json!({})));
    let out = dir.path().join("out");
    assert_eq!(run(&["solve"], &cfg, &out), 0);
    assert_eq!(run(&["transform"], &cfg, &out), 0);
    let first = std::fs::read(out.join("samples.csv")).unwrap();
    let entries = std::fs::read_dir(out.join("cache")).unwrap().count();
    assert_eq!(entries, 27);
    assert_eq!(run(&["transform"], &cfg, &out), 0);
    assert_eq!(std::fs::read(out.join("samples.csv")).unwrap(), first);
}
