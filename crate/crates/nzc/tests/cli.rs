// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nzc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nzc")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_into(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run", "--teachers", "25", "--queries", "500", "--mechanism", "nzc-laplace", "--c", "20",
        "--gamma", "0.5", "--seed", "3", "--out",
    ];
    let out = out.to_str().unwrap();
    args.push(out);
    args.extend_from_slice(extra);
    nzc(&args)
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_into(out, &[]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stderr(&o).contains("runtime"));
    }
    for name in ["summary.json", "queries.csv", "ledger.txt"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn validation_failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases: [&[&str]; 4] = [
        &["--scale", "2"],
        &["--beta", "-1"],
        &["--delta", "2"],
        &["--mechanism", "median"],
    ];
    for extra in cases {
        let o = run_into(&out, extra);
        assert!(!o.status.success(), "{extra:?}");
        assert!(stderr(&o).contains("error"), "{extra:?}");
    }
    assert!(!out.exists(), "no partial report");
    assert!(!nzc(&["run", "--bogus-flag"]).status.success());
    assert!(!nzc(&["run", "--teachers", "5", "--queries", "3"]).status.success());
}

#[test]
fn bad_prediction_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.csv");
    fs::write(&pred, "query_id,teacher_id,label\n0,0,1\n0,1,12\n").unwrap();
    let o = nzc(&[
        "run", "--predictions", pred.to_str().unwrap(), "--classes", "3", "--mechanism", "lnmax",
        "--gamma", "1", "--out", dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("pred.csv:3"), "{}", stderr(&o));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "teachers = 10\nqueries = 50\nmechanism = \"nzc-gaussian\"\nsigma = 40.0\ntau = 1e-9\nseed = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = nzc(&[
        "run", "--config", cfg.to_str().unwrap(), "--seed", "8", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 8"));
    assert!(summary.contains("\"mechanism\": \"nzc-gaussian\""));
    assert!(summary.contains("\"meets_tau\": true"));
}

#[test]
fn account_recomputes_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(run_into(&out, &[]).status.success());
    let ledger = out.join("ledger.txt");
    let o = nzc(&["account", "--ledger", ledger.to_str().unwrap(), "--eps", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("queries 500"));
    assert!(text.contains("epsilon"));
    assert!(text.contains("delta"));

    let original = fs::read_to_string(&ledger).unwrap();
    let line = original.lines().nth(3).unwrap();
    let moments = line.rsplit(' ').next().unwrap();
    let tampered_moments = moments.replacen(char::is_numeric, "9", 1);
    let tampered = original.replacen(moments, &tampered_moments, 1);
    assert_ne!(tampered, original);
    fs::write(&ledger, tampered).unwrap();
    let o = nzc(&["account", "--ledger", ledger.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!nzc(&["account", "--ledger", "/nonexistent/ledger.txt"]).status.success());
}

#[test]
fn quick_verify_passes() {
    let o = nzc(&["verify", "--quick"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
}
