//! The rstrip example's trace, pinned byte-for-byte.

use stepwise::interp::{execute, ExecutionLimits};
use stepwise::syntax::parse;
use stepwise::trace::{deserialize_trace, serialize_trace};

const RSTRIP: &str = include_str!("fixtures/rstrip.py");
const GOLDEN: &str = include_str!("golden/rstrip_trace.jsonl");

#[test]
fn rstrip_trace_matches_golden() {
    let tree = parse(RSTRIP).unwrap();
    let r = execute(&tree, "test_rstrip(\"  hello world  \")", ExecutionLimits::default(), true);
    let text = serialize_trace(&r.trace);
    if std::env::var_os("STEPWISE_BLESS").is_some() {
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/rstrip_trace.jsonl"), &text).unwrap();
        return;
    }
    assert_eq!(text, GOLDEN);
    assert_eq!(deserialize_trace(GOLDEN).unwrap(), r.trace);
}
