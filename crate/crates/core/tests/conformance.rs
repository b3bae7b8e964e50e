//! Interpreter results against frozen reference-runtime outputs.
//!
//! `tests/conformance/corpus.json` is produced by `tests/conformance/gen.py`
//! running each program under python3; regenerate only when adding cases.

use serde::Deserialize;
use stepwise::interp::{execute, render_value, ExecutionLimits};
use stepwise::syntax::parse;
use stepwise::trace::Status;

#[derive(Deserialize)]
struct Record {
    id: usize,
    source: String,
    call: String,
    expect: Expect,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Expect {
    Ok { ok: String, stdout: String },
    Err { error: String, message: String },
}

/// (id, source, call, ok result and stdout, error kind and message).
pub type Case = (usize, String, String, Option<(String, String)>, Option<(String, String)>);

pub fn load() -> Vec<Case> {
    let text = include_str!("conformance/corpus.json");
    let records: Vec<Record> = serde_json::from_str(text).expect("corpus parses");
    records
        .into_iter()
        .map(|r| match r.expect {
            Expect::Ok { ok, stdout } => (r.id, r.source, r.call, Some((ok, stdout)), None),
            Expect::Err { error, message } => (r.id, r.source, r.call, None, Some((error, message))),
        })
        .collect()
}

fn strip_origin(msg: &str) -> &str {
    match msg.rfind(" (raised at line ") {
        Some(i) if msg.ends_with(')') => &msg[..i],
        _ => msg.strip_prefix("(raised at line ").map_or(msg, |_| ""),
    }
}

/// Returns a description of every disagreement.
pub fn mismatches() -> (usize, Vec<String>) {
    let corpus = load();
    let mut bad = Vec::new();
    for (id, source, call, ok, err) in &corpus {
        let tree = match parse(source) {
            Ok(t) => t,
            Err(e) => {
                bad.push(format!("#{id}: parse error {e}"));
                continue;
            }
        };
        let r = execute(&tree, call, ExecutionLimits::default(), true);
        match (ok, err) {
            (Some((want, want_out)), _) => {
                let got = r.return_value.as_ref().map(render_value);
                if r.status != Status::Ok || got.as_deref() != Some(want.as_str()) {
                    bad.push(format!(
                        "#{id} {call}: want {want}, got {:?} {:?} {:?}",
                        r.status, got, r.error
                    ));
                } else if &r.stdout != want_out {
                    bad.push(format!("#{id} {call}: stdout {:?} vs {:?}", r.stdout, want_out));
                }
            }
            (None, Some((kind, msg))) => match &r.error {
                Some(e) if &e.kind == kind && strip_origin(&e.message) == msg => {}
                other => bad.push(format!(
                    "#{id} {call}: want {kind}: {msg}, got {:?} {other:?}",
                    r.status
                )),
            },
            _ => unreachable!(),
        }
    }
    (corpus.len(), bad)
}

#[test]
fn corpus_matches_reference() {
    let start = std::time::Instant::now();
    let (n, bad) = mismatches();
    assert!(n >= 200, "corpus too small: {n}");
    for b in &bad {
        eprintln!("{b}");
    }
    assert!(bad.is_empty(), "{} of {n} programs disagree", bad.len());
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn corpus_covers_every_supported_name() {
    use stepwise::syntax::constraints::{BUILTIN_FUNCTIONS, METHOD_TABLE};
    let corpus = load();
    let ok_sources: Vec<&str> = corpus
        .iter()
        .filter(|c| c.3.is_some())
        .map(|c| c.1.as_str())
        .collect();
    let mut missing = Vec::new();
    for (ty, methods) in METHOD_TABLE {
        for m in *methods {
            let pat = format!(".{m}(");
            if !ok_sources.iter().any(|s| s.contains(&pat)) {
                missing.push(format!("{ty}.{m}"));
            }
        }
    }
    for b in BUILTIN_FUNCTIONS {
        let pat = format!("{b}(");
        if !ok_sources.iter().any(|s| s.contains(&pat)) {
            missing.push(b.to_string());
        }
    }
    assert!(missing.is_empty(), "not exercised: {missing:?}");
}
