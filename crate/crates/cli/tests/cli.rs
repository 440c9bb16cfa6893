use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bilinear_pdo::io::read_field;
use serde_json::{json, Value};

fn bpdo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpdo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = bpdo(dir, args);
    assert!(
        out.status.success(),
        "bpdo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn sample(dir: &Path, name: &str, axis: Value, item: Value) {
    let cfg = write_json(dir, &format!("{name}.cfg.json"), &json!({ "axis": axis, "output": name, "sample": item }));
    run_ok(dir, &["sample", "--config", cfg.to_str().unwrap()]);
}

fn gaussian(center: f64, modulation: f64, width: f64) -> Value {
    json!({ "kind": "function", "function": { "kind": "gaussian", "center": center, "modulation": modulation, "width": width } })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn stft_slice_matches_the_gaussian_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let axis = json!({ "points": 128, "half_width": 10.0 });
    sample(d, "f", axis.clone(), gaussian(0.0, 0.0, 1.0));
    sample(d, "phi", axis, json!({ "kind": "window", "width": 1.0, "domain": "line" }));
    let cfg = write_json(
        d,
        "stft.json",
        &json!({ "input": "f", "window": "phi.json", "output": "v", "slices": [{ "axis": 0 }, { "axis": 1, "name": "xi" }] }),
    );
    run_ok(d, &["stft", "--config", cfg.to_str().unwrap()]);
    for (file, _) in [("v-slice0.csv", 0), ("xi.csv", 1)] {
        let text = fs::read_to_string(d.join(file)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("axis,value,modulus"));
        let mut rows = 0;
        for line in lines {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            let expected = (-cols[1] * cols[1] / 4.0).exp() / 2f64.sqrt();
            assert!((cols[2] - expected).abs() <= 1e-9, "{file}: {line}");
            rows += 1;
        }
        assert_eq!(rows, 128);
    }
    let (v, header) = read_field(&d.join("v")).unwrap();
    assert_eq!(v.rank(), 2);
    assert!(header.window_id.is_some());
}

#[test]
fn same_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let axis = json!({ "points": 64 });
    sample(d, "f", axis.clone(), gaussian(0.5, 1.0, 0.8));
    sample(d, "phi", axis, json!({ "kind": "window", "width": 1.0, "domain": "line" }));
    let cfg = write_json(d, "stft.json", &json!({ "input": "f", "window": "phi", "output": "v", "slices": [{ "axis": 1 }] }));
    let cfg = cfg.to_str().unwrap();
    run_ok(d, &["stft", "--config", cfg, "--out-dir", "a"]);
    run_ok(d, &["stft", "--config", cfg, "--out-dir", "b"]);
    for name in ["v.json", "v.bin", "v-slice0.csv"] {
        assert_eq!(fs::read(d.join("a").join(name)).unwrap(), fs::read(d.join("b").join(name)).unwrap(), "{name}");
    }
}

#[test]
fn missing_input_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_json(d, "stft.json", &json!({ "input": "nowhere", "window": "phi", "output": "v" }));
    let out = bpdo(d, &["stft", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.json"));
    let out = bpdo(d, &["stft", "--config", "absent.json"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}

#[test]
fn failed_commands_leave_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let axis = json!({ "points": 32 });
    sample(d, "f", axis.clone(), gaussian(0.0, 0.0, 1.0));
    sample(d, "phi", axis, json!({ "kind": "window", "width": 1.0, "domain": "line" }));
    let cfg = write_json(d, "stft.json", &json!({ "input": "f", "window": "phi", "output": "v", "slices": [{ "axis": 5 }] }));
    let out = bpdo(d, &["stft", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert_eq!(code(&out), 2);
    assert!(!d.join("out/v.json").exists() && !d.join("out/v.bin").exists());
}

#[test]
fn malformed_config_and_unknown_suite_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_json(d, "bad.json", &json!({ "input": "f", "from": { "r": 0.0, "t": 0.0 }, "typo": 1 }));
    assert_eq!(code(&bpdo(d, &["convert", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&bpdo(d, &["verify", "no-such-suite"])), 2);
    assert_eq!(code(&bpdo(d, &["convert"])), 2);
    assert_eq!(code(&bpdo(d, &["frobnicate"])), 2);
}

#[test]
fn inadmissible_pair_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    sample(d, "a", json!({ "points": 16 }), json!({ "kind": "symbol", "symbol": { "name": "one", "terms": [{}] } }));
    let cfg = write_json(
        d,
        "conv.json",
        &json!({ "input": "a", "from": { "r": 0.0, "t": 0.0 }, "to": { "r": 0.8, "t": 0.8 }, "output": "b" }),
    );
    assert_eq!(code(&bpdo(d, &["convert", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn constant_symbol_applies_as_the_product() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let axis = json!({ "points": 32 });
    sample(d, "f", axis.clone(), gaussian(0.3, 1.0, 1.0));
    sample(d, "g", axis.clone(), gaussian(-0.4, -0.5, 0.9));
    sample(d, "one", axis, json!({ "kind": "symbol", "symbol": { "name": "one", "terms": [{}] } }));
    let cfg = d.join("apply.toml");
    fs::write(
        &cfg,
        "symbol = \"one\"\nf = \"f\"\ng = \"g\"\noutput = \"fg\"\n[pair]\nr = 0.5\nt = 0.5\n",
    )
    .unwrap();
    run_ok(d, &["apply", "--config", cfg.to_str().unwrap()]);
    let (out, _) = read_field(&d.join("fg")).unwrap();
    let (f, _) = read_field(&d.join("f")).unwrap();
    let (g, _) = read_field(&d.join("g")).unwrap();
    assert!(out.max_abs_diff(&f.mul(&g).unwrap()).unwrap() <= 1e-10);
}

#[test]
fn conversion_round_trip_reproduces_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let symbol = json!({ "name": "g", "terms": [{
        "x": { "kind": "gaussian", "center": 0.3, "width": 1.0 },
        "xi": { "kind": "gaussian", "center": 0.0, "width": 1.2 },
        "eta": { "kind": "gaussian", "center": -0.5, "width": 0.9 }
    }] });
    sample(d, "a", json!({ "points": 24 }), json!({ "kind": "symbol", "symbol": symbol }));
    let p1 = json!({ "r": 0.0, "t": 0.0 });
    let p2 = json!({ "r": 0.5, "t": 0.25 });
    let there = write_json(d, "there.json", &json!({ "input": "a", "from": p1, "to": p2, "output": "b" }));
    let back = write_json(d, "back.json", &json!({ "input": "b", "from": p2, "to": p1, "output": "c" }));
    run_ok(d, &["convert", "--config", there.to_str().unwrap()]);
    run_ok(d, &["convert", "--config", back.to_str().unwrap()]);
    let (a, _) = read_field(&d.join("a")).unwrap();
    let (b, _) = read_field(&d.join("b")).unwrap();
    let (c, _) = read_field(&d.join("c")).unwrap();
    assert!(b.rel_l2_error(&a).unwrap() > 1e-3);
    assert!(c.rel_l2_error(&a).unwrap() <= 1e-12);
}

#[test]
fn gaussian_symbol_is_classified_in_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = json!({ "kind": "gaussian", "center": 0.0, "width": 1.0 });
    let symbol = json!({ "name": "gaussian", "terms": [{ "x": g, "xi": g, "eta": g }] });
    sample(d, "a", json!({ "points": 48 }), json!({ "kind": "symbol", "symbol": symbol }));
    let cfg = write_json(d, "classify.json", &json!({ "symbol": "a", "output": "verdict.json" }));
    run_ok(d, &["classify", "--config", cfg.to_str().unwrap()]);
    let report: Value = serde_json::from_str(&fs::read_to_string(d.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(report["in_class"], json!(true));
    assert_eq!(report["verdicts_agree"], json!(true));
    let h = report["ladder"]["h_fit"].as_f64().unwrap();
    assert!(h > 0.0 && h <= 2.0);
}

#[test]
fn modnorm_of_a_gaussian_follows_the_moyal_identity() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    sample(d, "f", json!({ "points": 64, "half_width": 8.0 }), gaussian(0.0, 0.0, 1.0));
    let cfg = write_json(d, "m.json", &json!({ "input": "f", "p": 2.0, "q": "inf", "output": "inf.json" }));
    run_ok(d, &["modnorm", "--config", cfg.to_str().unwrap()]);
    let cfg = write_json(d, "m2.json", &json!({ "input": "f", "window": { "width": 1.0 }, "p": 2, "q": 2, "output": "two.json" }));
    run_ok(d, &["modnorm", "--config", cfg.to_str().unwrap()]);
    let report: Value = serde_json::from_str(&fs::read_to_string(d.join("two.json")).unwrap()).unwrap();
    // ||f|| ||phi|| = pi^{1/2} for two unit Gaussians.
    let n = report["norm"].as_f64().unwrap();
    assert!((n - std::f64::consts::PI.sqrt()).abs() <= 1e-10);
    assert_eq!(report["q"], json!(2.0));
}

#[test]
fn smoothed_weight_is_written_with_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_json(
        d,
        "w.json",
        &json!({
            "weight": { "groups": [{ "axes": [0], "exp_rate": 0.5, "inv_exp_power": 1.0, "poly_degree": 0.0 }] },
            "s": [0.5],
            "axes": [{ "points": 128, "half_width": 12.0 }],
            "output": "w0"
        }),
    );
    run_ok(d, &["smooth-weight", "--config", cfg.to_str().unwrap()]);
    let report: Value = serde_json::from_str(&fs::read_to_string(d.join("w0.report.json")).unwrap()).unwrap();
    assert!(report["constant"].as_f64().unwrap() >= 1.0);
    assert!(report["h_fit"].as_f64().unwrap().is_finite());
    assert_eq!(read_field(&d.join("w0")).unwrap().0.rank(), 1);
}

#[test]
fn battery_honours_the_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_json(
        d,
        "b.json",
        &json!({ "axis": { "points": 32 }, "output": "bat", "sample": { "kind": "battery", "battery": { "size": 2 } } }),
    );
    run_ok(d, &["sample", "--config", cfg.to_str().unwrap(), "--seed", "42"]);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(d.join("bat-manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], json!(42));
    assert_eq!(manifest["members"].as_array().unwrap().len(), 2);
    assert!(d.join("bat-f1.bin").exists() && d.join("bat-g1.json").exists());
}

#[test]
fn verify_writes_report_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run_ok(d, &["verify", "fourier", "stft", "--out-dir", "reports", "--threads", "1"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS fourier"));
    let report: Value = serde_json::from_str(&fs::read_to_string(d.join("reports/fourier.json")).unwrap()).unwrap();
    assert_eq!(report["suite"], json!("fourier"));
    assert_eq!(report["pass"], json!(true));
    assert!(report["cases"].as_array().unwrap().iter().all(|c| c["inputs_hash"].is_string()));
    let timing: Value = serde_json::from_str(&fs::read_to_string(d.join("reports/fourier.timing.json")).unwrap()).unwrap();
    assert!(timing["wall_seconds"].as_f64().unwrap() < 5.0);
    assert!(d.join("reports/stft.json").exists());
}

#[test]
fn failing_suite_exits_with_one_and_keeps_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_json(d, "strict.json", &json!({ "fourier": { "tolerance": 1e-30 } }));
    let out = bpdo(d, &["verify", "fourier", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_str(&fs::read_to_string(d.join("fourier.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], json!(false));
}
