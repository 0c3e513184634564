//! End-to-end runs of the binary: artifact schemas, determinism, exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use resona1d::config::preset;

const BIN: &str = env!("CARGO_BIN_EXE_resona1d");

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("resona1d-cli-{}-{tag}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap()
}

fn preset_path(name: &str) -> String {
    format!("{}/../../presets/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn parse_csv(path: &Path) -> Vec<(f64, usize, f64, f64, String)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "alpha,band,re_omega,im_omega,method");
    lines
        .map(|row| {
            let f: Vec<&str> = row.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
                f[4].to_string(),
            )
        })
        .collect()
}

#[test]
fn compare_emits_a_report_with_the_error_and_the_config_hash() {
    let dir = workdir("compare");
    let out = run(&[
        "compare",
        "--config",
        &preset_path("modulated_n3"),
        "--grid",
        "5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("compare.json")).unwrap()).unwrap();
    let err_abs = report["err_abs"].as_f64().unwrap();
    assert!(err_abs > 0.0 && err_abs < 5e-6, "err_abs {err_abs}");
    let hash = report["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(report.get("gaps").is_none());
    assert!(report.get("k_gaps").is_none());
}

#[test]
fn floquet_bands_match_static_bands_on_an_unmodulated_chain() {
    let dir = workdir("staticmatch");
    let config = preset_path("static_equidistant");
    for (cmd, extra) in [("static-bands", None), ("bands", Some("floquet"))] {
        let mut args = vec![cmd, "--config", &config, "--grid", "11"];
        if let Some(method) = extra {
            args.extend(["--method", method]);
        }
        args.extend(["--out", dir.to_str().unwrap()]);
        let out = run(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = parse_csv(&dir.join("static-bands.csv"));
    let b = parse_csv(&dir.join("bands.csv"));
    assert_eq!(a.len(), 11 * 6);
    assert_eq!(a.len(), b.len());
    assert!(a.iter().all(|r| r.4 == "static"));
    assert!(b.iter().all(|r| r.4 == "floquet"));
    let omega = 0.03;
    for (ra, rb) in a.iter().zip(&b) {
        assert_eq!(ra.0, rb.0, "grid mismatch");
        // same multiset of folded values: compare to the nearest entry at
        // this grid point, circularly across the folding boundary
        let near = b
            .iter()
            .filter(|r| r.0 == ra.0)
            .map(|r| {
                let d = ra.2 - r.2;
                (d - omega * (d / omega).round()).hypot(ra.3 - r.3)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(near <= 1e-8, "row {ra:?} nearest {near:.3e}");
    }
}

#[test]
fn gaps_on_a_static_preset_reports_no_k_gaps() {
    let dir = workdir("staticgaps");
    let out = run(&[
        "gaps",
        "--config",
        &preset_path("static_equidistant"),
        "--grid",
        "11",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("gaps.json")).unwrap()).unwrap();
    assert_eq!(report["k_gaps"].as_array().unwrap().len(), 0);
    let deviation = report["reciprocity"]["deviation"].as_f64().unwrap();
    assert!(deviation <= 1e-8, "deviation {deviation}");
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn identical_runs_emit_byte_identical_tables() {
    let (da, db) = (workdir("det-a"), workdir("det-b"));
    let config = preset_path("kgap_phases");
    for dir in [&da, &db] {
        let out = run(&[
            "bands",
            "--config",
            &config,
            "--grid",
            "7",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(da.join("bands.csv")).unwrap();
    let b = fs::read(db.join("bands.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn truncation_override_changes_the_exact_table() {
    let dir = workdir("kflag");
    let config = preset_path("single_resonator");
    for (k, name) in [("1", "k1"), ("2", "k2")] {
        let sub = dir.join(name);
        let out = run(&[
            "exact",
            "--config",
            &config,
            "--grid",
            "3",
            "--k",
            k,
            "--out",
            sub.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.join("k1/exact.csv")).unwrap();
    let b = fs::read(dir.join("k2/exact.csv")).unwrap();
    assert_ne!(a, b, "truncation had no effect on the roots");
}

#[test]
fn perturbation_lists_the_folded_crossings() {
    // the staggered preset with one common amplitude, as the expansion needs
    let mut config = preset("kgap_phases").unwrap();
    config.modulation.eps_rho = vec![0.05; 3];
    config.modulation.eps_kappa = vec![0.05; 3];
    config.alpha_grid = 21;
    let dir = workdir("perturbation");
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = run(&[
        "perturbation",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("perturbation.json")).unwrap()).unwrap();
    assert_eq!(report["config_hash"].as_str().unwrap(), config.hash());
    let crossings = report["crossings"].as_array().unwrap();
    assert!(!crossings.is_empty());
    for c in crossings {
        assert_eq!(c["multiplicity"].as_u64().unwrap(), 2);
        assert!(c["gap_estimate"].as_f64().unwrap() >= 0.0);
        assert_eq!(c["perturbed"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn config_problems_exit_2() {
    let dir = workdir("config-errors");
    let missing = run(&["bands", "--config", "nowhere/missing.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let malformed = run(&["bands", "--config", bad.to_str().unwrap()]);
    assert_eq!(malformed.status.code(), Some(2));

    let even = run(&[
        "bands",
        "--config",
        &preset_path("static_equidistant"),
        "--grid",
        "10",
    ]);
    assert_eq!(even.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&even.stderr).contains("alpha_grid"));

    let method = run(&[
        "bands",
        "--config",
        &preset_path("static_equidistant"),
        "--method",
        "capacitance",
    ]);
    assert_eq!(method.status.code(), Some(2));

    let conflict = run(&[
        "static-bands",
        "--config",
        &preset_path("static_equidistant"),
        "--method",
        "exact",
    ]);
    assert_eq!(conflict.status.code(), Some(2));
}

#[test]
fn solver_failures_exit_1_with_a_diagnostic() {
    let mut config = preset("single_resonator").unwrap();
    config.tolerances.muller = 1e-300; // unreachable in floating point
    config.alpha_grid = 3;
    let dir = workdir("solverfail");
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = run(&[
        "exact",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    let dir = workdir("threads");
    let bad = Command::new(BIN)
        .args([
            "static-bands",
            "--config",
            &preset_path("static_equidistant"),
            "--grid",
            "5",
            "--out",
            dir.to_str().unwrap(),
        ])
        .env("RESONA1D_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let ok = Command::new(BIN)
        .args([
            "static-bands",
            "--config",
            &preset_path("static_equidistant"),
            "--grid",
            "5",
            "--out",
            dir.to_str().unwrap(),
        ])
        .env("RESONA1D_THREADS", "1")
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
}
