//! End-to-end tests of the binary surface: exit codes, artifact formats,
//! the resume/recheck cycle, and the prime-table cache.

use std::io::Write;
use std::process::Command;

use omega_sieve::pipeline::{run_case2_resumable, Case2State, SieveParams};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_omega-sieve"))
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(
        bin().arg("no-such-command").output().unwrap().status.code(),
        Some(1)
    );
    assert_eq!(
        bin().args(["case2"]).output().unwrap().status.code(),
        Some(1)
    );
    assert_eq!(
        bin()
            .args(["case2", "--q-max", "10", "--deltas", "1.5"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1),
        "delta outside (0,1) is a config error"
    );
    assert_eq!(
        bin()
            .args(["case2", "--q-max", "10", "--resume"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1),
        "--resume without --out"
    );
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(
        bin().arg("--version").output().unwrap().status.code(),
        Some(0)
    );
}

#[test]
fn case3_exit_codes() {
    assert_eq!(
        bin()
            .args(["case3", "--log10N", "200"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        bin()
            .args(["case3", "--log10N", "150"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn case2_jsonl_stream_shape() {
    let out = bin().args(["case2", "--q-max", "10000"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() > 10);
    for line in &lines[..lines.len() - 1] {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in [
            "q_lo",
            "q_hi",
            "delta",
            "log_main",
            "log_remainder",
            "margin",
            "verdict",
        ] {
            assert!(v.get(key).is_some(), "missing {key} in {line}");
        }
        assert_eq!(v["verdict"], "positive");
    }
    let summary: serde_json::Value = serde_json::from_str(lines[lines.len() - 1]).unwrap();
    assert_eq!(summary["failures"], 0);
    assert_eq!(summary["complete"], true);
}

#[test]
fn case2_resume_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.jsonl");
    let part = dir.path().join("part.jsonl");
    let q_max = 25_000_000u64;

    let status = bin()
        .args([
            "case2",
            "--q-max",
            &q_max.to_string(),
            "--out",
            full.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    // build an interrupted artifact: certificates up to the first checkpoint
    // plus the state file the binary would have written there
    let params = SieveParams::default();
    let prefix = std::cell::RefCell::new(Vec::new());
    let snap = std::cell::RefCell::new(None::<(Case2State, u64)>);
    run_case2_resumable(
        None,
        q_max,
        &params,
        1_000_000,
        |c| {
            if snap.borrow().is_none() {
                let mut p = prefix.borrow_mut();
                let line = serde_json::to_string(c).unwrap();
                p.extend_from_slice(line.as_bytes());
                p.push(b'\n');
            }
        },
        |st| {
            if snap.borrow().is_none() {
                let off = prefix.borrow().len() as u64;
                *snap.borrow_mut() = Some((st.clone(), off));
            }
        },
    )
    .unwrap();
    let (state, offset) = snap
        .into_inner()
        .expect("the run must cross at least one checkpoint");
    let prefix = prefix.into_inner();
    // the binary keeps only certificates persisted before the checkpoint, so
    // simulate a crash by writing extra garbage past the recorded offset
    std::fs::write(&part, &prefix).unwrap();
    std::fs::OpenOptions::new()
        .append(true)
        .open(&part)
        .unwrap()
        .write_all(b"{\"torn\":")
        .unwrap();
    let mut state_bytes = state.encode();
    state_bytes.extend_from_slice(&offset.to_le_bytes());
    std::fs::write(dir.path().join("part.jsonl.state"), state_bytes).unwrap();

    let status = bin()
        .args([
            "case2",
            "--q-max",
            &q_max.to_string(),
            "--out",
            part.to_str().unwrap(),
            "--resume",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(
        std::fs::read(&full).unwrap(),
        std::fs::read(&part).unwrap(),
        "resumed run must concatenate byte-identically"
    );
    assert!(
        !dir.path().join("part.jsonl.state").exists(),
        "state cleaned up after completion"
    );

    let status = bin()
        .args([
            "case2",
            "--q-max",
            "1",
            "--out",
            part.to_str().unwrap(),
            "--recheck",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn recheck_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let status = bin()
        .args([
            "case2",
            "--q-max",
            "100000",
            "--out",
            path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let tampered = std::fs::read_to_string(&path).unwrap().replacen(
        "\"verdict\":\"positive\"",
        "\"verdict\":\"failed\"",
        1,
    );
    std::fs::write(&path, tampered).unwrap();
    let status = bin()
        .args([
            "case2",
            "--q-max",
            "1",
            "--out",
            path.to_str().unwrap(),
            "--recheck",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn scan_report_to_file_and_thread_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("t1.json");
    let many = dir.path().join("t4.json");
    for (threads, path) in [("1", &one), ("4", &many)] {
        let status = bin()
            .args([
                "scan",
                "--lo",
                "2",
                "--hi",
                "50000",
                "--target",
                "21",
                "--threads",
                threads,
                "--out",
            ])
            .arg(path)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&many).unwrap());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&one).unwrap()).unwrap();
    assert_eq!(v["range"][1], 50000);
    assert_eq!(v["target"], 21);
}

#[test]
fn scan_failure_exit_code() {
    // target 0 is unachievable for N=3 (min omega is 1)
    let out = bin()
        .args(["scan", "--lo", "3", "--hi", "10", "--target", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn witness_matches_scan_and_rejects_bad_hypothesis() {
    let out = bin().arg("witness").arg("97").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["a"].as_u64().unwrap() + v["b"].as_u64().unwrap(), 97);
    // m = 4 is neither 1 nor prime
    let out = bin()
        .args(["witness", "1000", "--m", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // K = 12 budget fails the m·1476 ≤ 2^(K-2) hypothesis for m = 3
    let out = bin()
        .args(["witness", "1000", "--m", "3", "--target", "12"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prime_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = |label: &str| {
        let out = bin()
            .args(["witness", "5000", "--m", "1"])
            .env("OMEGA_SIEVE_CACHE", dir.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{label}");
        out.stdout
    };
    let first = run("cold cache");
    let cache_files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(cache_files.len(), 1);
    let second = run("warm cache");
    assert_eq!(first, second);
}

#[test]
fn gaps_json_shape() {
    let out = bin().args(["gaps", "--limit", "100"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["max_gap"], 8);
    assert_eq!(v["at_prime"], 89);
}
