//! Process helpers for driving the `stepwise` binary.
#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use serde_json::{json, Value as Json};

pub const RSTRIP_CALL: &str = "test_rstrip(\"  hello world  \")";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_stepwise"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// `ask` output for the rstrip fixture.
pub fn rstrip_qset(cap: usize, seed: u64) -> Json {
    let f = fixture("rstrip.py");
    let out = run(
        &["ask", f.to_str().unwrap(), "--call", RSTRIP_CALL, "--cap", &cap.to_string(), "--seed", &seed.to_string()],
        "",
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Json = serde_json::from_str(&out.stdout).unwrap();
    v["qset"].clone()
}

/// A completion answering every question of `qset` with its ground truth.
pub fn perfect_completion(qset: &Json) -> String {
    let mut lines = vec![qset["io"]["expected"].as_str().unwrap().to_string()];
    for q in qset["questions"].as_array().unwrap() {
        match q["kind"].as_str().unwrap() {
            "CF" => lines.push(q["gt_stmt"].as_str().unwrap().to_string()),
            _ => lines.push(format!("{}; {}", q["gt_val"].as_str().unwrap(), q["gt_ty"].as_str().unwrap())),
        }
    }
    format!("<reasoning>\nstep by step\n</reasoning>\n<answer>\n{}\n</answer>", lines.join("\n"))
}

pub fn whitebox_record(id: usize, qset: &Json, completion: &str) -> String {
    let program = std::fs::read_to_string(fixture("rstrip.py")).unwrap();
    json!({
        "episode_id": id,
        "mode": "whitebox",
        "program": program,
        "entry_call": RSTRIP_CALL,
        "qset": qset,
        "completion": completion,
    })
    .to_string()
}
