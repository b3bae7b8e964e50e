use stepwise::interp::{
    call_builtin_method, execute, parse_literal, render_value, ExecutionLimits,
};
use stepwise::syntax::parse;
use stepwise::trace::Status;

const RSTRIP: &str = include_str!("fixtures/rstrip.py");
const CLOSEST: &str = include_str!("fixtures/closest.py");

fn run(src: &str, call: &str) -> stepwise::interp::ExecutionResult {
    let tree = parse(src).expect("parses");
    execute(&tree, call, ExecutionLimits::default(), true)
}

fn ret(src: &str, call: &str) -> String {
    let r = run(src, call);
    assert_eq!(r.status, Status::Ok, "{:?}", r.error);
    render_value(r.return_value.as_ref().unwrap())
}

#[test]
fn rstrip_examples() {
    assert_eq!(ret(RSTRIP, "test_rstrip(\"  hello world  \")"), "'  hello world'");
    assert_eq!(ret(RSTRIP, "test_rstrip('E2NC97aoEt')"), "''");
    assert_eq!(ret(RSTRIP, "test_rstrip('ab')"), "''");
}

#[test]
fn closest_example() {
    assert_eq!(
        ret(CLOSEST, "find_closest_elements([1.0, 2.0, 3.9, 4.0, 5.0, 2.2])"),
        "(3.9, 4.0)"
    );
}

#[test]
fn nontermination_runs_out_of_fuel() {
    let tree = parse("def f():\n    while True:\n        pass\nf()").unwrap();
    let limits = ExecutionLimits { fuel: 1000, ..Default::default() };
    let r = execute(&tree, "f()", limits, true);
    assert_eq!(r.status, Status::FuelExhausted);
}

#[test]
fn runtime_error_line_is_last_trace_step() {
    let src = "def f(x):\n    y = 1\n    z = y // x\n    return z\n";
    let r = run(src, "f(0)");
    assert_eq!(r.status, Status::RuntimeError);
    let e = r.error.unwrap();
    assert_eq!(e.kind, "ZeroDivisionError");
    assert_eq!(e.message, "integer division or modulo by zero");
    assert_eq!(e.line, 3);
    assert_eq!(r.trace.steps.last().unwrap().line, 3);
}

#[test]
fn helper_errors_report_origin() {
    let src = "def g(a):\n    return a[5]\ndef f(x):\n    y = g(x)\n    return y\n";
    let r = run(src, "f([1])");
    let e = r.error.unwrap();
    assert_eq!(e.kind, "IndexError");
    assert_eq!(e.line, 4);
    assert_eq!(e.message, "list index out of range (raised at line 2)");
}

#[test]
fn trace_shape_for_rstrip() {
    let r = run(RSTRIP, "test_rstrip(\"  hello world  \")");
    let lines: Vec<u32> = r.trace.steps.iter().map(|s| s.line).collect();
    assert_eq!(&lines[..5], &[1, 11, 2, 3, 4]);
    let s2 = &r.trace.steps[2];
    assert_eq!(s2.state.get("result").unwrap().val, "'  hello world'");
    assert_eq!(s2.state.get("result").unwrap().ty, "str");
    let third_for = r.trace.find(3, 3).unwrap();
    assert_eq!(third_for.state.get("char").unwrap().val, "'h'");
    assert_eq!(*lines.last().unwrap(), 10);
}

#[test]
fn determinism() {
    let a = run(CLOSEST, "find_closest_elements([1.0, 2.0, 3.9, 4.0, 5.0, 2.2])");
    let b = run(CLOSEST, "find_closest_elements([1.0, 2.0, 3.9, 4.0, 5.0, 2.2])");
    assert_eq!(a, b);
}

#[test]
fn bad_calls() {
    assert_eq!(run(RSTRIP, "test_rstrip(").status, Status::CallError);
    assert_eq!(run(RSTRIP, "nope(1)").status, Status::CallError);
    assert_eq!(run(RSTRIP, "test_rstrip(x)").status, Status::CallError);
    assert_eq!(run(RSTRIP, "test_rstrip(1, 2)").status, Status::CallError);
}

#[test]
fn standalone_methods() {
    let l = parse_literal("[3, 1, 2]").unwrap();
    let out = call_builtin_method(&l, "sort", &[]).unwrap();
    assert_eq!(render_value(&out.receiver), "[1, 2, 3]");
    assert_eq!(render_value(&out.result), "None");
    let s = parse_literal("'abacb'").unwrap();
    let a = parse_literal("'a'").unwrap();
    assert_eq!(render_value(&call_builtin_method(&s, "count", &[a]).unwrap().result), "2");
    let h = parse_literal("'  hello world  '").unwrap();
    assert_eq!(
        render_value(&call_builtin_method(&h, "rstrip", &[]).unwrap().result),
        "'  hello world'"
    );
}

#[test]
fn deep_nesting_is_safe() {
    let src = "def h(n):\n    x = []\n    for i in range(n):\n        x = [x]\n    return x\ndef f(n):\n    return len(h(n))\n";
    assert_eq!(ret(src, "f(40000)"), "1");
    let src = "def g(n):\n    return 0 if n == 0 else 1 + g(n - 1)\ndef f(n):\n    return g(n)\n";
    assert_eq!(ret(src, "f(900)"), "900");
    let r = run(src, "f(5000)");
    assert_eq!(r.error.unwrap().kind, "RecursionError");
}
