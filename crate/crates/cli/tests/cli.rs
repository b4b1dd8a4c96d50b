use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn txfee(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_txfee"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn error_doc(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error document")
}

#[test]
fn table1_json_embeds_seed_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let out = txfee(&["reproduce", "table1", "--format", "json", "--seed", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("table1.json")).unwrap()).unwrap();
    assert_eq!(doc["seed"], 3);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    let first = &rows[0];
    assert_eq!(first["mechanism"], "first-price");
    assert_eq!((&first["uic"], &first["mmic"], &first["oca"]), (&"fail".into(), &"pass".into(), &"pass".into()));
}

#[test]
fn counterexamples_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = txfee(&["reproduce", "counterexamples"], dir.path());
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("counterexamples.csv")).unwrap();
    assert!(text.starts_with("# txfee version="));
    let line = text.lines().find(|l| l.starts_with("second-price miner injects")).unwrap();
    let fields: Vec<&str> = line.split(',').collect();
    // honest, deviant, ..., strict_deviant
    assert_eq!((fields[3], fields[4], fields[9]), ("9.0", "21.0", "14.0"));
}

#[test]
fn missing_field_exits_2_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    fs::write(&cfg, r#"{"fee_rate": 1.0, "fee_value": {"kind": "fixed", "value": 1.0}}"#).unwrap();
    let out = txfee(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let doc = error_doc(&out);
    assert_eq!(doc["kind"], "validation");
    assert!(doc.to_string().contains("miners"), "{doc}");
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = txfee(
        &["tfm-run", "--mechanism", r#"{"kind":"second-price","block_size":2,"k":3}"#, "--bids", "1,2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_doc(&out)["exit_code"], 2);
    let out = txfee(&["reproduce", "table9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // The output path is an existing file, so creating the directory fails.
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = txfee(&["analytic", "lambert", "--x", "1"], &blocker);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_doc(&out)["kind"], "runtime");
}

#[test]
fn tfm_run_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = txfee(
        &["tfm-run", "--mechanism", r#"{"kind":"second-price","block_size":4,"k":3}"#, "--bids", "10,9,8,3"],
        dir.path(),
    );
    assert!(out.status.success());
    let summary = fs::read_to_string(dir.path().join("tfm_summary.csv")).unwrap();
    assert!(summary.lines().nth(2).unwrap().starts_with("second-price,4,9.0,9.0,0.0"), "{summary}");

    let out = txfee(
        &[
            "ic-audit",
            "--mechanism",
            r#"{"kind":"second-price","block_size":4,"k":3}"#,
            "--values",
            "10,9,8,3",
            "--notion",
            "mmic",
            "--gamma",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let audit = fs::read_to_string(dir.path().join("ic_audit.csv")).unwrap();
    let row = audit.lines().nth(2).unwrap();
    assert!(row.starts_with("second-price,mmic,1.0,9.0,16.0,7.0,"), "{row}");
}

#[test]
fn scenario_file_runs_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenarios.json");
    fs::write(
        &cfg,
        r#"{"scenarios": [
            {"name": "two-honest", "kind": "sim", "seed": 5, "params": {
                "miners": [{"strategy": {"kind": "honest"}, "hash_share": 0.5},
                           {"strategy": {"kind": "honest"}, "hash_share": 0.5}],
                "fee_rate": 2.0, "fee_value": {"kind": "fixed", "value": 0.5},
                "horizon": {"kind": "main_chain_blocks", "blocks": 500}}},
            {"name": "grid", "kind": "analytic", "params": {"op": "selfish-grid", "alphas": [0.1, 0.3]}},
            {"name": "fp", "kind": "audit", "params": {
                "mechanism": {"kind": "first-price", "block_size": 2}, "values": [10, 2, 1], "notions": ["uic"]}},
            {"name": "eq", "kind": "reproduce", "params": {"name": "undercut-equilibrium"}}
        ]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = txfee(&["run", "--config", cfg.to_str().unwrap()], &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "two-honest/simulate.csv",
        "two-honest/simulate_summary.csv",
        "grid/selfish_grid.csv",
        "fp/ic_audit.csv",
        "eq/undercut_equilibrium.csv",
    ] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let sim = fs::read_to_string(out_dir.join("two-honest/simulate.csv")).unwrap();
    assert!(sim.starts_with("# txfee version=") && sim.lines().next().unwrap().ends_with("seed=5"));

    // Same file again: byte-identical outputs.
    let again = dir.path().join("again");
    assert!(txfee(&["run", "--config", cfg.to_str().unwrap()], &again).status.success());
    assert_eq!(sim, fs::read_to_string(again.join("two-honest/simulate.csv")).unwrap());
}

#[test]
fn duplicate_scenario_names_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dup.json");
    let s = r#"{"name": "a", "kind": "analytic", "params": {"op": "lambert", "x": [1]}}"#;
    fs::write(&cfg, format!("[{s}, {s}]")).unwrap();
    let out = txfee(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(error_doc(&out)["message"].as_str().unwrap().contains("duplicate"));
}
