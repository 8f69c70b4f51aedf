use std::path::PathBuf;
use std::process::{Command, Output};

use distshor_cli::{mask_wall_time, run, validate, ModeArg, Outcome, RunConfig};

fn distshor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distshor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("distshor-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn monolithic_run_factors_fifteen() {
    let out = distshor(&["--N", "15", "--a", "7", "--seed", "1", "--mode", "monolithic"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["outcome"]["factors"], serde_json::json!([3, 5]));
    assert_eq!(report["ledger"]["ebits"], 0);
    assert!(!report["rounds"].as_array().unwrap().is_empty());
}

#[test]
fn distributed_run_agrees_and_communicates() {
    let mono = distshor(&["--N", "15", "--a", "7", "--seed", "1", "--mode", "monolithic"]);
    let dist = distshor(&["--N", "15", "--a", "7", "--seed", "1", "--mode", "distributed"]);
    assert_eq!(dist.status.code(), Some(0));
    let (mono, dist) = (json(&mono), json(&dist));
    assert_eq!(dist["outcome"], mono["outcome"]);
    let js = |r: &serde_json::Value| -> Vec<u64> {
        r["rounds"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x["j"].as_u64().unwrap())
            .collect()
    };
    assert_eq!(js(&mono), js(&dist));
    assert!(dist["ledger"]["ebits"].as_u64().unwrap() > 0);
    assert!(dist["ledger"]["cbits_total"].as_u64().unwrap() > 0);
    assert!(dist["ledger"]["teleports"].as_u64().unwrap() > 0);
}

#[test]
fn invalid_configurations_exit_with_two() {
    let out = distshor(&["--N", "16"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N must be odd"));
    assert_eq!(distshor(&["--N", "15", "--a", "5"]).status.code(), Some(2));
    assert_eq!(distshor(&["--N", "15", "--a", "15"]).status.code(), Some(2));
    assert_eq!(distshor(&["--N", "15", "--m", "0"]).status.code(), Some(2));
    assert_eq!(distshor(&["--N", "1"]).status.code(), Some(2));
}

#[test]
fn oversized_runs_exit_with_three() {
    let out = distshor(&["--N", "33554433"]);
    assert_eq!(out.status.code(), Some(3));
    // 5·21 + 30 + 1 logical qubits exceed the 128-qubit state.
    let out = distshor(&["--N", "1048577", "--m", "30"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eight_bit_plan_fits_its_nodes() {
    let out = distshor(&["--N", "255", "--a", "2", "--mode", "distributed", "--counts-only"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let counts = &json(&out)["counts"];
    assert_eq!(counts["placement"]["node_capacity"], 13);
    assert_eq!(counts["placement"]["logical_qubits"], 57);
    assert_eq!(counts["placement"]["capacity_respected"], true);
    assert_eq!(counts["paper_predictions"]["NL(AN_a)"]["measured"], 8);
    assert_eq!(counts["paper_predictions"]["NL(A_a)"]["measured"], 44);
}

#[test]
fn classical_rejections_exit_with_one() {
    for n in ["9", "13"] {
        let out = distshor(&["--N", n]);
        assert_eq!(out.status.code(), Some(1));
        assert!(json(&out)["outcome"]["failure"]["reason"].is_string());
    }
}

#[test]
fn reports_are_reproducible() {
    let mut config = RunConfig::new(15);
    config.seed = 5;
    config.mode = ModeArg::Distributed;
    config.max_rounds = Some(2);
    let first = run(&config).unwrap().report.to_json();
    let second = run(&config).unwrap().report.to_json();
    assert_eq!(mask_wall_time(&first), mask_wall_time(&second));
    assert!(first.contains("wall_time_seconds"));
}

#[test]
fn report_keys_are_ordered() {
    let mut config = RunConfig::new(15);
    config.a = Some(7);
    config.counts_only = true;
    let text = run(&config).unwrap().report.to_json();
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap_or_else(|| panic!("missing {k}"));
    let keys = [
        "config",
        "outcome",
        "rounds",
        "ledger",
        "counts",
        "G",
        "NL",
        "T",
        "paper_predictions",
        "wall_time_seconds",
    ];
    assert!(keys.windows(2).all(|w| pos(w[0]) < pos(w[1])), "{keys:?}");
}

#[test]
fn counts_only_reports_structure() {
    let path = scratch("counts.json");
    let out = distshor(&[
        "--N",
        "15",
        "--a",
        "7",
        "--counts-only",
        "--report",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let p = &report["counts"]["paper_predictions"];
    assert_eq!(p["NL(AN_a)"]["measured"], 8);
    assert_eq!(p["NL(AN_a)"]["predicted"], 8);
    assert_eq!(p["NL(c_m(M_a))"]["predicted"], 1408);
    assert_eq!(p["T(SHOR)"]["predicted"], 384);
    assert_eq!(p["qubits"]["measured"], 29);
    assert_eq!(p["nodes"]["measured"], 7);
    assert_eq!(p["node_capacity"]["measured"], 9);
    assert_eq!(report["counts"]["G"]["FA"]["measured"], 16);
    assert_eq!(report["counts"]["G"]["HA"]["measured"], 14);
    assert_eq!(report["outcome"], "counts_only");
    assert_eq!(report["counts"]["placement"]["capacity_respected"], true);
}

#[test]
fn circuit_dump_lists_every_gate() {
    let path = scratch("circuit.txt");
    let mut config = RunConfig::new(15);
    config.a = Some(7);
    config.m = Some(2);
    config.counts_only = true;
    config.mode = ModeArg::Distributed;
    config.dump_circuit = Some(path.clone());
    let out = run(&config).unwrap();
    assert!(matches!(out.report.outcome, Outcome::CountsOnly));
    let text = std::fs::read_to_string(&path).unwrap();
    let gates = text.lines().take_while(|l| !l.starts_with('#')).count();
    // H on each counting qubit, c_m(M_a), then QFT^-1 with its swap.
    assert_eq!(gates, 2 + 2 * (2 * 4 * 136 + 4) + 3 + 1);
    assert!(text.lines().next().unwrap().starts_with("H^m/H[0] | H | "));
    assert!(text.contains("# placement"));
    assert!(text.contains("carry | 6 | 4"));
}

#[test]
fn validation_fills_defaults() {
    let v = validate(&RunConfig::new(21)).unwrap();
    assert_eq!((v.n, v.m, v.max_rounds, v.logical_qubits), (5, 10, 32, 36));
}
