//! Behavior tests for the `esr` binary: config handling, file-based
//! pipelines, and error reporting.

use std::path::Path;
use std::process::{Command, Output};

fn esr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const ROUNDTRIP_CONFIG: &str = r#"{
    "sweep": {"b_min_t": 0.0, "b_max_t": 0.05, "b_step_t": 4e-4},
    "synth": {"spin_signal_depth_db": 6.0, "noise_db_rms": 0.0, "seed": 7,
               "asymmetry_a_s": null, "f_window_mode_widths": 3.0, "f_points": 21}
}"#;

#[test]
fn validate_echoes_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "cfg.json", "{}");
    let out = esr(&["validate", "--config", "cfg.json"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
    assert_eq!(v["resolved"]["sweep"]["b_step_t"].as_f64().unwrap(), 4e-4);
    assert_eq!(v["resolved"]["modes"].as_array().unwrap().len(), 3);
}

#[test]
fn invalid_config_reports_all_errors_as_json() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "bad.json",
        r#"{"sweep": {"b_min_t": 1.0, "b_max_t": 0.2, "b_step_t": -1.0}, "junk": 0}"#,
    );
    let out = esr(&["validate", "--config", "bad.json"], tmp.path());
    assert!(!out.status.success());
    let text = String::from_utf8(out.stderr).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let details = v["error"]["details"].as_array().unwrap();
    assert!(details.len() >= 3, "details: {details:?}");
    let keys: Vec<&str> = details.iter().filter_map(|d| d["key"].as_str()).collect();
    assert!(keys.contains(&"junk"));
    assert!(keys.contains(&"sweep.b_step_t"));
}

#[test]
fn empty_config_names_required_keys() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "empty.json", "");
    let out = esr(&["validate", "--config", "empty.json"], tmp.path());
    assert!(!out.status.success());
    let text = String::from_utf8(out.stderr).unwrap();
    assert!(text.contains("spin_system") && text.contains("modes"));
}

#[test]
fn synth_peaks_fitg_roundtrip_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "cfg.json", ROUNDTRIP_CONFIG);
    let out = esr(
        &["synth", "--config", "cfg.json", "--out-dir", "run", "--traces-only"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut peak_args: Vec<String> = Vec::new();
    for tag in ["454600000", "599300000", "622800000"] {
        let trace = format!("run/trace_{tag}hz.csv");
        let out = esr(&["peaks", "--trace", &trace], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        peak_args.push(format!("run/trace_{tag}hz.peaks.json"));
    }

    let mut args = vec!["fitg", "--zero-intercept"];
    for p in &peak_args {
        args.push("--peaks");
        args.push(p);
    }
    args.extend_from_slice(&["--out-json", "gfit.json", "--out-csv", "gfit.csv"]);
    let out = esr(&args, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("gfit.json")).unwrap())
            .unwrap();
    let g = fit["g_eff"].as_f64().unwrap();
    assert!((g - 5.51).abs() / 5.51 < 1e-3, "g_eff = {g}");
    assert!(fit["config_hash"].as_str().unwrap().len() == 64);

    let csv = std::fs::read_to_string(tmp.path().join("gfit.csv")).unwrap();
    assert!(csv.contains("b_tesla,freq_hz,fit_hz"));
    assert!(csv.contains("# config_hash:"));
}

#[test]
fn fit_refines_gpar_from_peak_files() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "cfg.json", ROUNDTRIP_CONFIG);
    let out = esr(
        &["synth", "--config", "cfg.json", "--out-dir", "run", "--traces-only"],
        tmp.path(),
    );
    assert!(out.status.success());
    for tag in ["454600000", "599300000", "622800000"] {
        let trace = format!("run/trace_{tag}hz.csv");
        assert!(esr(&["peaks", "--trace", &trace], tmp.path()).status.success());
    }
    let out = esr(
        &[
            "fit",
            "--config",
            "cfg.json",
            "--peaks",
            "run/trace_454600000hz.peaks.json",
            "--peaks",
            "run/trace_599300000hz.peaks.json",
            "--peaks",
            "run/trace_622800000hz.peaks.json",
            "--free",
            "g_par",
            "--out",
            "spinfit.json",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("spinfit.json")).unwrap())
            .unwrap();
    let g = v["refined"]["g_par"].as_f64().unwrap();
    assert!((g - 5.51).abs() / 5.51 < 1e-3, "refined g_par = {g}");
    assert!(v["converged"].as_bool().unwrap());
}

#[test]
fn peaks_refuses_broken_schema() {
    let tmp = tempfile::tempdir().unwrap();
    // Header lacks mode_frequency_hz.
    let bad = "# esr-trace v1\n# db_convention: 20*log10(|S21|)\n# config_hash: x\n# seed: none\nb_tesla,s21_db\n0.0,-1\n0.001,-1\n0.002,-2\n0.003,-1\n0.004,-1\n";
    write(tmp.path(), "bad.csv", bad);
    let out = esr(&["peaks", "--trace", "bad.csv"], tmp.path());
    assert!(!out.status.success());
    let text = String::from_utf8(out.stderr).unwrap();
    assert!(text.contains("mode_frequency_hz"), "stderr: {text}");
}

#[test]
fn gmodel_forward_and_inverse() {
    let tmp = tempfile::tempdir().unwrap();
    let out = esr(
        &["gmodel", "--eta", "-1", "--k", "0.33", "--out", "fwd.json"],
        tmp.path(),
    );
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fwd.json")).unwrap())
            .unwrap();
    let g_par = v["forward"][0]["g_par"].as_f64().unwrap();
    assert!((g_par.abs() - 2.027).abs() < 0.005, "g_par = {g_par}");

    // Coarse k scan keeps this a behavior test; the dense scan lives in the
    // acceptance suite.
    let out = esr(
        &[
            "gmodel",
            "--target-g",
            "5.51",
            "--k-range",
            "0,0.43",
            "--k-step",
            "0.05",
            "--out",
            "inv.json",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("inv.json")).unwrap())
            .unwrap();
    assert_eq!(v["inverse"]["roots"].as_array().unwrap().len(), 0);
    assert!(!v["inverse"]["target_feasible"].as_bool().unwrap());
    let max_g = v["inverse"]["feasibility"]["max_abs_g_par"].as_f64().unwrap();
    assert!(max_g < 2.87, "max |g_par| = {max_g}");
}

#[test]
fn sense_reference_point_near_one_ppm() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "sense.json",
        r#"{
            "sample_temperature_k": 0.02,
            "loaded_q": 1000.0,
            "line_width_hz": 3.0e5,
            "modes_hz": [4.546e8]
        }"#,
    );
    let out = esr(&["sense", "--params", "sense.json", "--out", "sense_out.json"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("sense_out.json")).unwrap())
            .unwrap();
    let ppm = v["rows"][0]["concentration_ppm"].as_f64().unwrap();
    assert!(ppm.log10().abs() <= 1.0, "ppm = {ppm}");

    // Unknown keys in the parameter file are rejected.
    write(tmp.path(), "bad.json", r#"{"sample_temperature_k": 0.02, "loaded_q": 1e3, "line_width_hz": 3e5, "modes_hz": [4.5e8], "wat": 1}"#);
    let out = esr(&["sense", "--params", "bad.json"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn synth_is_deterministic_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "cfg.json",
        r#"{
            "modes": [{"frequency_hz": 4.546e8}],
            "sweep": {"b_min_t": 0.0, "b_max_t": 0.02, "b_step_t": 4e-4},
            "synth": {"spin_signal_depth_db": 6.0, "noise_db_rms": 0.05, "seed": 99,
                       "asymmetry_a_s": 0.3, "f_window_mode_widths": 3.0, "f_points": 11}
        }"#,
    );
    for dir in ["run1", "run2"] {
        let out = esr(&["synth", "--config", "cfg.json", "--out-dir", dir], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["map_454600000hz.csv", "trace_454600000hz.csv", "resolved_config.json"] {
        let a = std::fs::read(tmp.path().join("run1").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("run2").join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
}
