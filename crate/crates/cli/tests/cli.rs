use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build(dir: &TempDir, name: &str, p: &str) -> std::path::PathBuf {
    let file = dir.path().join(name);
    let o = pmlab(&["build", "--family", "partial-swap", "--p", p, "--out", path_str(&file)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    file
}

#[test]
fn built_file_validates_and_measures_like_the_family() {
    let dir = TempDir::new().unwrap();
    let file = build(&dir, "w.pmx", "0.3");
    let from_file = pmlab(&["validate", "--input", path_str(&file)]);
    assert_eq!(code(&from_file), 0, "{}", stderr(&from_file));
    let direct = pmlab(&["validate", "--family", "partial-swap", "--p", "0.3"]);
    assert_eq!(stdout_json(&from_file)["report"], stdout_json(&direct)["report"]);
    assert_eq!(stdout_json(&direct)["report"]["valid"], Value::Bool(true));

    let m_file = pmlab(&["measure", "--input", path_str(&file)]);
    let m_direct = pmlab(&["measure", "--family", "partial-swap", "--p", "0.3"]);
    assert_eq!(code(&m_file), 0);
    assert_eq!(stdout_json(&m_file)["report"], stdout_json(&m_direct)["report"]);
}

#[test]
fn build_embeds_the_resolved_config() {
    let dir = TempDir::new().unwrap();
    let file = build(&dir, "w.pmx", "0.5");
    let bytes = fs::read(&file).unwrap();
    assert_eq!(&bytes[..5], b"PMX1\n");
    let len = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let header: Value = serde_json::from_slice(&bytes[9..9 + len]).unwrap();
    assert_eq!(header["config"]["family"], "partial-swap");
    assert_eq!(header["config"]["p"], 0.5);
    assert_eq!(header["config"]["d"], 2);
    assert_eq!(header["side"], 16);
    assert_eq!(bytes.len(), 9 + len + 16 * 16 * 16);
}

#[test]
fn corrupted_file_fails_validation_with_the_residual() {
    let dir = TempDir::new().unwrap();
    let file = build(&dir, "w.pmx", "0.5");
    let mut bytes = fs::read(&file).unwrap();
    let len = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let body = 9 + len;
    // overwrite entry (0, 1) and its mirror (1, 0) with a signalling term
    for k in [1usize, 16] {
        let at = body + 16 * k;
        bytes[at..at + 8].copy_from_slice(&0.2f64.to_le_bytes());
    }
    let bad = dir.path().join("bad.pmx");
    fs::write(&bad, &bytes).unwrap();
    let o = pmlab(&["validate", "--input", path_str(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("L_V residual"), "{}", stderr(&o));
    let r = &stdout_json(&o)["report"];
    assert!(r["lv_residual"].as_f64().unwrap() > 1e-8);
    assert_eq!(r["valid"], Value::Bool(false));

    let asymmetric = dir.path().join("asym.pmx");
    let at = body + 16 * 2;
    bytes[at..at + 8].copy_from_slice(&0.3f64.to_le_bytes());
    fs::write(&asymmetric, &bytes).unwrap();
    let o = pmlab(&["validate", "--input", path_str(&asymmetric)]);
    assert_eq!(code(&o), 1);
    assert!(stdout_json(&o)["report"]["hermiticity_defect"].as_f64().unwrap() > 0.1);

    let truncated = dir.path().join("short.pmx");
    fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
    let o = pmlab(&["validate", "--input", path_str(&truncated)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("entry bytes"), "{}", stderr(&o));
}

#[test]
fn theorem6_at_half_reports_the_failed_mirror_hypothesis() {
    let o = pmlab(&["certify", "--theorem", "6", "--family", "partial-swap", "--p", "0.5", "--seed", "7"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let r = &stdout_json(&o)["report"];
    let mirror = r["hypotheses"]
        .as_array()
        .unwrap()
        .iter()
        .find(|h| h["name"] == "e0_mirrors_b1")
        .unwrap();
    assert!((mirror["value"].as_f64().unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-9);
    assert_eq!(r["conclusion_pass"], Value::Bool(false));
    // explicit local operations reach one bit at p = 1/2
    assert!(r["conclusion_value"].as_f64().unwrap() > 1.0 - 1e-3);
    assert_eq!(r["evidence"]["restarts"], 32);
}

#[test]
fn theorem6_holds_for_the_relabeled_three_relation_process() {
    let o = pmlab(&[
        "certify", "--theorem", "6", "--family", "three-relation", "--alpha",
        "0.7071067811865476,0,0.7071067811865476", "--seed", "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = &stdout_json(&o)["report"];
    assert_eq!(r["hypotheses_pass"], Value::Bool(true));
    assert!(r["conclusion_value"].as_f64().unwrap() <= 1e-4);
    assert_eq!(r["subsystems"]["selected"][0], "e0");
}

#[test]
fn theorem7_finds_its_factor_and_probes_lo_when_seeded() {
    let o = pmlab(&[
        "certify", "--theorem", "7", "--family", "three-relation", "--theta", "0.9553166181245093", "--phi",
        "0.7853981633974483", "--seed", "5", "--restarts", "4", "--budget", "200",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = stdout_json(&o);
    assert_eq!(v["config"]["f"][0], "e1");
    assert!((v["report"]["conclusion_value"].as_f64().unwrap() + 1.1751617816995457).abs() < 1e-9);
    assert!(v["report"]["evidence"]["best_value"].is_number());

    let forced = pmlab(&[
        "certify", "--theorem", "7", "--family", "three-relation", "--theta", "0.9553166181245093", "--phi",
        "0.7853981633974483", "--f", "e2",
    ]);
    assert_eq!(code(&forced), 1);
    assert_eq!(stdout_json(&forced)["report"]["hypotheses_pass"], Value::Bool(false));
}

#[test]
fn scan_writes_the_frozen_csv_and_a_config_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scan.csv");
    let o = pmlab(&[
        "scan", "--family", "partial-swap", "--grid", "0:1:0.05", "--seed", "11", "--restarts", "8", "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "parameter,I_B,I_mutual,I_B_LO,restarts,seed");
    assert_eq!(lines.len(), 22);
    let rows: Vec<Vec<&str>> = lines[1..].iter().map(|l| l.split(',').collect()).collect();
    let p: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(p.windows(2).all(|w| w[0] < w[1]));
    assert_eq!((p[0], p[10], p[20]), (0.0, 0.5, 1.0));
    let lo: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(lo[0] >= 1.0 - 1e-3 && lo[20] >= 1.0 - 1e-3, "{lo:?}");
    assert!(rows.iter().all(|r| r[4] == "8" && r[5] == "11"));

    // rerunning from the sidecar reproduces the table
    let sidecar = dir.path().join("scan.csv.config.json");
    let again = dir.path().join("again.csv");
    let o = pmlab(&["scan", "--config", path_str(&sidecar), "--out", path_str(&again)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&again).unwrap(), text);
}

#[test]
fn three_relation_scan_sweeps_both_angles() {
    let o = pmlab(&[
        "scan", "--family", "three-relation", "--theta-grid", "0:1.5:0.5", "--phi-grid", "0:1:1", "--seed", "2",
        "--restarts", "2", "--budget", "100", "--format", "json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = stdout_json(&o);
    let rows = v["report"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0]["parameter"], "0.0000000000000000e0:0.0000000000000000e0");
    assert!(rows.iter().all(|r| r["I_B_LO"].is_number()));
}

#[test]
fn report_used_as_config_reproduces_itself() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first.json");
    let o = pmlab(&[
        "certify", "--theorem", "6", "--family", "partial-swap", "--p", "0.25", "--seed", "9", "--restarts",
        "3", "--budget", "150", "--out", path_str(&first),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let second = dir.path().join("second.json");
    let o = pmlab(&["certify", "--config", path_str(&first), "--out", path_str(&second)]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let a: Value = serde_json::from_str(&fs::read_to_string(&first).unwrap()).unwrap();
    let mut b: Value = serde_json::from_str(&fs::read_to_string(&second).unwrap()).unwrap();
    b["config"]["out"] = a["config"]["out"].clone();
    assert_eq!(a, b);

    let wrong = pmlab(&["scan", "--config", path_str(&first)]);
    assert_eq!(code(&wrong), 2);
    assert!(stderr(&wrong).contains("`command`"));
}

#[test]
fn lemmas_run_with_a_seed() {
    let o = pmlab(&["lemmas", "--seed", "4", "--trials", "40", "--dims", "2,3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = stdout_json(&o);
    assert_eq!(v["report"]["all_pass"], Value::Bool(true));
    assert_eq!(v["report"]["lemmas"].as_array().unwrap().len(), 5);
    assert_eq!(v["config"]["ensemble"], "generic");
}

#[test]
fn usage_errors_exit_2_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let bad_cfg = dir.path().join("cfg.json");
    fs::write(&bad_cfg, r#"{"family": "partial-swap", "p": "half"}"#).unwrap();
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"family": "partial-swap", "q": 1}"#).unwrap();
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["lemmas"], "`seed`"),
        (vec!["scan", "--family", "partial-swap"], "`seed`"),
        (vec!["certify", "--theorem", "6", "--family", "partial-swap", "--p", "0.5"], "`seed`"),
        (vec!["certify", "--theorem", "5", "--family", "partial-swap", "--p", "0.5"], "`theorem`"),
        (vec!["scan", "--family", "partial-swap", "--grid", "0:1:0", "--seed", "1"], "`grid`"),
        (vec!["validate", "--family", "partial-swap", "--p", "1.5"], "`p`"),
        (vec!["validate", "--family", "partial-swap", "--p", "0.5", "--format", "csv"], "`format`"),
        (vec!["validate", "--family", "three-relation", "--alpha", "1,1,1"], "`alpha`"),
        (vec!["validate"], "`family`"),
        (vec!["build", "--family", "partial-swap", "--p", "0.5"], "`out`"),
        (vec!["lemmas", "--seed", "1", "--dims", "2,9"], "`dims`"),
        (vec!["validate", "--config", path_str(&bad_cfg)], "`p`"),
        (vec!["validate", "--config", path_str(&unknown)], "`q`"),
    ];
    for (args, field) in cases {
        let o = pmlab(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{args:?}: {}", stderr(&o));
    }
    let o = pmlab(&["validate", "--bogus"]);
    assert_eq!(code(&o), 2);
}
