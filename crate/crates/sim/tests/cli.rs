use std::path::Path;
use std::process::{Command, Output};

fn petcode(state: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petcode"))
        .arg("--state")
        .arg(state)
        .args(args)
        .env_remove("PETCODE_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn full_election_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path();
    json(&petcode(state, &["setup", "--voters", "3", "--code-space", "8", "--code-bits", "3", "--lambda", "4"]));
    assert_eq!(json(&petcode(state, &["register"]))["voters"], 3);

    let cast = json(&petcode(state, &["cast", "--voter", "voter-1", "--choices", "10"]));
    assert_eq!(cast["state"], "codes-sent");
    assert_eq!(cast["accepted"], true);
    assert_eq!(cast["counters"], serde_json::json!({"pet": 1, "cca2_decrypt": 1, "threshold_decrypt": 1}));
    let fin = json(&petcode(state, &["finalize", "--voter", "voter-1"]));
    assert_eq!(fin["confirmed"], true);

    let cancelled =
        json(&petcode(state, &["cast", "--voter", "voter-2", "--choices", "01", "--platform", "inconsistent:2"]));
    assert_eq!(cancelled["state"], "cancelled");
    let flipped = json(&petcode(state, &["cast", "--voter", "voter-3", "--choices", "11", "--platform", "flip:1"]));
    assert_eq!(flipped["accepted"], false);

    let again = petcode(state, &["cast", "--voter", "voter-1", "--choices", "10"]);
    assert_eq!(again.status.code(), Some(2));

    assert_eq!(json(&petcode(state, &["tally"]))["counts"], serde_json::json!([1, 0]));
    let report = json(&petcode(state, &["verify"]));
    assert_eq!((report["finalized"].as_u64(), report["cancelled"].as_u64()), (Some(1), Some(1)));

    let board = state.join("board.txt");
    let text = std::fs::read_to_string(&board).unwrap();
    std::fs::write(&board, text.replacen("voter-1", "voter-9", 1)).unwrap();
    let tampered = petcode(state, &["verify"]);
    assert_eq!(tampered.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&tampered.stderr).contains("board rejected"));
}

#[test]
fn experiment_reports_are_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = petcode(
        dir.path(),
        &[
            "experiment",
            "cai",
            "--trials",
            "5",
            "--voters",
            "4",
            "--code-space",
            "16",
            "--code-bits",
            "4",
            "--lambda",
            "2",
        ],
    );
    let report = json(&out);
    assert_eq!(report["name"], "cai");
    assert_eq!(report["trials"], 5);
    assert!(report["bound"].as_f64().unwrap() > 0.0);

    let bad = petcode(dir.path(), &["experiment", "cai", "--trials", "1", "--corrupted-tellers", "1,2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn attack_demo_prints_each_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = petcode(dir.path(), &["attack-demo", "--seed", "cli"]);
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["run"], "honest");
    assert_eq!(lines[1]["passes_checks"], true);
    assert_eq!(lines[1]["codes"], lines[0]["codes"]);
    assert_eq!(lines[2]["rejected"], true);
    assert_eq!(lines[3]["malicious_accepted"], false);
    assert_eq!(lines[4]["attack_succeeds"], true);
}
