//! End-to-end tests of the `qmclab` binary: artifact shapes, determinism,
//! and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn qmclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON artifact")
}

#[test]
fn constants_reproduce_known_digits() {
    let out = qmclab(&["constants"]);
    let v = json_of(&out);
    assert_eq!(v["schema"], "qmclab/1");
    assert_eq!(v["command"], "constants");
    let records = v["records"].as_array().unwrap();
    // 1MC..5MC plus GP.
    assert_eq!(records.len(), 6);
    let find = |name: &str| {
        records
            .iter()
            .find(|r| r["name"] == name)
            .unwrap_or_else(|| panic!("missing record {name}"))
    };
    for (name, alpha, rho) in [
        ("1MC", 0.8785, -0.689),
        ("2MC", 0.9349, -0.617),
        ("3MC", 0.9563, -0.584),
        ("GP", 0.498, -0.97),
    ] {
        let r = find(name);
        let got_alpha = r["alpha"].as_f64().unwrap();
        let got_rho = r["rho_star"].as_f64().unwrap();
        assert!((got_alpha - alpha).abs() <= 2e-3, "{name}: alpha {got_alpha} vs {alpha}");
        assert!((got_rho - rho).abs() <= 5e-3, "{name}: rho {got_rho} vs {rho}");
    }
}

#[test]
fn constants_csv_is_a_flat_curve_table() {
    let out = qmclab(&["--format", "csv", "constants", "--k", "1", "--grid-step", "0.05"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,k,rho,ratio"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("1MC,1,"), "row: {first}");
    // Both curves present.
    assert!(text.lines().any(|l| l.starts_with("GP,3,")));
}

#[test]
fn exact_diag_single_edge_hits_the_singlet() {
    let v = json_of(&qmclab(&["exact-diag", "--graph", "single_edge"]));
    let e = v["max_energy"].as_f64().unwrap();
    assert!((e - 1.0).abs() < 1e-12, "max_energy = {e}");
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["round", "--graph", "cycle:5", "--trials", "30", "--seed", "42"];
    let a = qmclab(&args);
    let b = qmclab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    // A different seed changes the payload.
    let c = qmclab(&["round", "--graph", "cycle:5", "--trials", "30", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn floats_are_emitted_in_scientific_notation() {
    let out = qmclab(&["exact-diag", "--graph", "single_edge"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1.0000000000000000e0"), "artifact: {text}");
}

#[test]
fn exit_codes_follow_the_contract() {
    // Usage errors: unknown subcommand / flag and csv on a non-table.
    assert_eq!(qmclab(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(qmclab(&["round", "--graph", "cycle:5", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        qmclab(&["--format", "csv", "round", "--graph", "cycle:5"]).status.code(),
        Some(1)
    );
    // Validation errors.
    assert_eq!(
        qmclab(&["borell-check", "--rho", "0.5", "--samples", "2000"]).status.code(),
        Some(2)
    );
    assert_eq!(qmclab(&["solve-sdp", "--graph", "no/such/file.graph"]).status.code(), Some(2));
    // Help and success paths.
    assert_eq!(qmclab(&["--help"]).status.code(), Some(0));
    assert_eq!(
        qmclab(&["gegenbauer-check", "--n", "3", "--dmax", "4", "--grid-step", "0.01"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn gegenbauer_check_reports_pass() {
    let v = json_of(&qmclab(&["gegenbauer-check", "--n", "4", "--dmax", "6", "--grid-step", "0.01"]));
    assert_eq!(v["report"]["pass"], true);
    assert!(v["report"]["min_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn borell_check_small_run_passes() {
    let v = json_of(&qmclab(&[
        "borell-check",
        "--n",
        "2",
        "--rho",
        "-0.3",
        "--samples",
        "20000",
        "--seed",
        "5",
    ]));
    assert_eq!(v["report"]["all_pass"], true);
    assert_eq!(v["seed"], 5);
    assert!(v["chunk_count"].as_u64().unwrap() >= 1);
}

#[test]
fn gap_instance_file_feeds_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("hyper.graph");
    let out_path = dir.path().join("gap.json");
    let out = qmclab(&[
        "--out",
        out_path.to_str().unwrap(),
        "gap-instance",
        "--n",
        "4",
        "--rho",
        "-0.5",
        "--graph-out",
        graph_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "artifact went to --out");
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(v["vertices"], 16);
    assert!(Path::new(&graph_path).exists());

    let solved = json_of(&qmclab(&[
        "solve-sdp",
        "--graph",
        graph_path.to_str().unwrap(),
        "--objective",
        "product",
        "--rank",
        "4",
        "--restarts",
        "2",
    ]));
    // Identity embedding is optimal, so the solver lands at the closed-form
    // conditioned value (1/4 - rho/4)/(1 - w_loops), here with rho = -0.5.
    let value = solved["value"].as_f64().unwrap();
    let w_loops = v["loop_weight_removed"].as_f64().unwrap();
    let expected = (0.25 + 0.5 / 4.0) / (1.0 - w_loops);
    assert!((value - expected).abs() < 1e-3, "value {value} vs {expected}");
}

#[test]
fn ug_reduce_dictator_attains_completeness_value() {
    let v = json_of(&qmclab(&[
        "ug-reduce",
        "--rho",
        "-0.584",
        "--loops",
        "--dictator",
        "0",
    ]));
    let value = v["dictator_product_value"].as_f64().unwrap();
    assert!((value - 0.396).abs() < 1e-12, "completeness value {value}");
    assert_eq!(v["label_count"], 3);
    assert_eq!(v["vertices"], 32);
}

#[test]
fn prod_opt_single_edge_saturates_the_product_bound() {
    let v = json_of(&qmclab(&["prod-opt", "--graph", "single_edge", "--seed", "3"]));
    let value = v["value"].as_f64().unwrap();
    assert!((value - 0.5).abs() < 1e-9, "product value {value}");
}

#[test]
fn bh_bound_single_edge_oracle() {
    let v = json_of(&qmclab(&["bh-bound", "--graph", "single_edge"]));
    assert!((v["bound"].as_f64().unwrap() - 20.5).abs() < 1e-12);
    assert!((v["stats"]["p_max"].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn dictator_test_parameters_are_logged_in_base_ten() {
    let v = json_of(&qmclab(&[
        "dictator-test",
        "--epsilon",
        "0.01",
        "--rho",
        "-0.584",
        "--c-m",
        "3.0",
        "--m",
        "2",
    ]));
    let p = &v["parameters"];
    assert!(p["log10_delta"].as_f64().unwrap() < -1000.0);
    assert!(p["gamma"].as_f64().unwrap() > 0.0);
    assert!(p["degree"].as_f64().unwrap() > 0.0);
}
