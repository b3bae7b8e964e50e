//! Tree-walking interpreter for the subset, with statement-level tracing.

mod builtins;
mod exec;
mod index;
mod literal;
mod methods;
mod num;
mod obj;
mod ops;
mod render;
mod value;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::syntax::ast::{walk_expr, stmt_exprs, ExprKind, Stmt, SyntaxTree};
use crate::syntax::parse_expression;
use crate::trace::{StateSnapshot, Status, Trace};

pub use builtins::builtin_names;
pub use literal::{literal_from_expr, parse_literal, LiteralError};
pub use render::float_repr;
pub use value::{HashKey, RenderOverflow, Unhashable, Value};

use exec::{Halt, Interp};
use obj::Obj;

/// Resource caps for one execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionLimits {
    /// Statement executions (plus per-element charges for bulk operations).
    pub fuel: u64,
    pub max_output_chars: usize,
    pub max_value_render_chars: usize,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits {
            fuel: 100_000,
            max_output_chars: 4096,
            max_value_render_chars: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("limits must all be positive")]
pub struct LimitsError;

impl ExecutionLimits {
    pub fn new(fuel: u64, max_output_chars: usize, max_value_render_chars: usize) -> Result<Self, LimitsError> {
        let l = ExecutionLimits {
            fuel,
            max_output_chars,
            max_value_render_chars,
        };
        l.validate().map(|_| l)
    }

    pub fn validate(&self) -> Result<(), LimitsError> {
        if self.fuel == 0 || self.max_output_chars == 0 || self.max_value_render_chars == 0 {
            Err(LimitsError)
        } else {
            Ok(())
        }
    }
}

/// Error raised by the program (or by the harness when the call is invalid).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecError {
    /// Exception class name, e.g. `ZeroDivisionError`.
    pub kind: String,
    pub message: String,
    /// Traced line at which execution stopped; 0 if nothing ran.
    pub line: u32,
}

impl std::fmt::Display for ExecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.message.is_empty() {
            write!(f, "{} (line {})", self.kind, self.line)
        } else {
            write!(f, "{}: {} (line {})", self.kind, self.message, self.line)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionResult {
    pub status: Status,
    pub return_value: Option<Value>,
    pub stdout: String,
    pub trace: Trace,
    pub error: Option<ExecError>,
}

impl ExecutionResult {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Canonical text of a value.
pub fn render_value(v: &Value) -> String {
    v.render()
}

/// Canonical text of a value, or overflow past `cap` characters.
pub fn render_value_capped(v: &Value, cap: usize) -> Result<String, RenderOverflow> {
    v.render_capped(cap)
}

/// Type name as the reference runtime reports it (`NoneType`, `int`, ...).
pub fn type_name(v: &Value) -> &str {
    v.type_name()
}

/// Stable identifier of a program: hex prefix of the SHA-256 of its source lines.
pub fn program_id(tree: &SyntaxTree) -> String {
    let digest = Sha256::digest(tree.lines.join("\n").as_bytes());
    hex::encode(&digest[..8])
}

/// A parsed entry call: function name, positional and keyword literal arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryCall {
    pub function: String,
    pub args: Vec<Value>,
    pub kwargs: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CallError {
    #[error("call does not parse: {0}")]
    Parse(String),
    #[error("expected a call of a named function")]
    NotACall,
    #[error("argument {0} is not a literal")]
    NotLiteral(usize),
    #[error("no top-level function named `{0}`")]
    UnknownFunction(String),
}

impl EntryCall {
    pub fn parse(text: &str) -> Result<EntryCall, CallError> {
        let e = parse_expression(text).map_err(|e| CallError::Parse(e.to_string()))?;
        let ExprKind::Call { func, args, keywords } = &e.kind else {
            return Err(CallError::NotACall);
        };
        let ExprKind::Name(name) = &func.kind else {
            return Err(CallError::NotACall);
        };
        let mut values = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            values.push(literal_from_expr(a).map_err(|_| CallError::NotLiteral(i + 1))?);
        }
        let mut kwargs = Vec::with_capacity(keywords.len());
        for (i, k) in keywords.iter().enumerate() {
            let v = literal_from_expr(&k.value).map_err(|_| CallError::NotLiteral(args.len() + i + 1))?;
            kwargs.push((k.name.clone(), v));
        }
        Ok(EntryCall {
            function: name.clone(),
            args: values,
            kwargs,
        })
    }

    /// Source text of the call, rendering each argument canonically.
    pub fn render(&self) -> String {
        let mut parts: Vec<String> = self.args.iter().map(Value::render).collect();
        parts.extend(self.kwargs.iter().map(|(k, v)| format!("{k}={}", v.render())));
        format!("{}({})", self.function, parts.join(", "))
    }
}

fn calls_function(stmt: &Stmt, name: &str) -> bool {
    if matches!(stmt.kind, crate::syntax::ast::StmtKind::FunctionDef(_)) {
        return false;
    }
    let mut hit = false;
    stmt_exprs(stmt, &mut |e| {
        walk_expr(e, &mut |x| {
            if let ExprKind::Call { func, .. } = &x.kind {
                if matches!(&func.kind, ExprKind::Name(n) if n == name) {
                    hit = true;
                }
            }
        })
    });
    hit
}

/// Index of the first top-level statement that calls `entry` (the driver).
pub fn driver_index(tree: &SyntaxTree, entry: &str) -> Option<usize> {
    tree.body.iter().position(|s| calls_function(s, entry))
}

const EXEC_STACK: usize = 256 * 1024 * 1024;

/// Run `entry_call` against `program`.
///
/// Top-level statements before the driver (the first top-level statement
/// calling the entry function) run traced in the module frame. The driver
/// itself is recorded as one step whose state holds the bound parameters, then
/// the entry function body is traced. Nested calls run untraced.
pub fn execute(
    program: &SyntaxTree,
    entry_call: &str,
    limits: ExecutionLimits,
    trace_enabled: bool,
) -> ExecutionResult {
    stacker::grow(EXEC_STACK, || execute_inner(program, entry_call, limits, trace_enabled))
}

fn call_error(pid: String, call: &str, message: String) -> ExecutionResult {
    ExecutionResult {
        status: Status::CallError,
        return_value: None,
        stdout: String::new(),
        trace: Trace::from_steps(pid, call.to_string(), Status::CallError, Vec::new()),
        error: Some(ExecError {
            kind: "CallError".into(),
            message,
            line: 0,
        }),
    }
}

fn execute_inner(
    tree: &SyntaxTree,
    call_text: &str,
    limits: ExecutionLimits,
    trace_enabled: bool,
) -> ExecutionResult {
    let pid = program_id(tree);
    let call_text = call_text.trim();
    if limits.validate().is_err() {
        return call_error(pid, call_text, "limits must all be positive".into());
    }
    let call = match EntryCall::parse(call_text) {
        Ok(c) => c,
        Err(e) => return call_error(pid, call_text, e.to_string()),
    };
    if tree.function(&call.function).is_none() {
        return call_error(
            pid,
            call_text,
            CallError::UnknownFunction(call.function.clone()).to_string(),
        );
    }
    let driver = driver_index(tree, &call.function);
    let prelude = &tree.body[..driver.unwrap_or(tree.body.len())];
    let (driver_line, driver_text) = match driver {
        Some(i) => (tree.body[i].span.line, tree.body[i].text.clone()),
        None => (0, call_text.to_string()),
    };

    let mut it = Interp::new(limits, trace_enabled);
    let mut outcome: Result<Obj, Halt> = Ok(Obj::None);
    let mut call_failed = false;
    let globals = it.globals.clone();
    match it.exec_block(prelude, &globals) {
        Ok(_) => {}
        Err(h) => outcome = Err(h),
    }
    if outcome.is_ok() {
        let f = it.load(&call.function, &globals);
        let args: Vec<Obj> = call.args.iter().map(Obj::thaw).collect();
        let kwargs: Vec<(String, Obj)> =
            call.kwargs.iter().map(|(k, v)| (k.clone(), Obj::thaw(v))).collect();
        outcome = match f {
            Ok(Obj::Func(c)) => match it.bind_frame(&c, args, kwargs) {
                Ok(frame) => {
                    it.traced = Some(frame.clone());
                    it.begin_step(driver_line, &driver_text);
                    match it.tick(1).and_then(|_| it.end_step(&frame)) {
                        Ok(()) => it.run_frame(&c, &frame),
                        Err(h) => Err(h),
                    }
                }
                Err(h) => {
                    call_failed = true;
                    Err(h)
                }
            },
            Ok(other) => exec::raise(
                "TypeError",
                format!("'{}' object is not callable", other.type_name()),
            ),
            Err(e) => Err(e.into()),
        };
    }

    let mut status = Status::Ok;
    let mut error = None;
    let mut return_value = None;
    match outcome {
        Ok(v) => match v.repr_capped(limits.max_value_render_chars) {
            Ok(_) => return_value = Some(v.freeze()),
            Err(_) => {
                status = Status::OutputOverflow;
                error = Some(ExecError {
                    kind: "OutputOverflow".into(),
                    message: "return value rendering exceeds the limit".into(),
                    line: it.traced_line,
                });
            }
        },
        Err(h) => {
            it.close_pending();
            let line = it.traced_line;
            let (st, kind, message) = match h {
                Halt::Exc(e, origin) => {
                    let mut msg = e.msg;
                    if let Some(o) = origin.filter(|o| *o != line) {
                        msg = if msg.is_empty() {
                            format!("(raised at line {o})")
                        } else {
                            format!("{msg} (raised at line {o})")
                        };
                    }
                    let st = if call_failed {
                        Status::CallError
                    } else {
                        Status::RuntimeError
                    };
                    (st, e.kind.to_string(), msg)
                }
                Halt::Fuel => (
                    Status::FuelExhausted,
                    "FuelExhausted".into(),
                    format!("more than {} steps", limits.fuel),
                ),
                Halt::Output => (
                    Status::OutputOverflow,
                    "OutputOverflow".into(),
                    "output exceeds the limit".into(),
                ),
            };
            status = st;
            error = Some(ExecError { kind, message, line });
        }
    }
    let raw = std::mem::take(&mut it.steps)
        .into_iter()
        .map(|s| (s.line, s.stmt, s.state.unwrap_or_default()))
        .collect::<Vec<(u32, String, StateSnapshot)>>();
    let trace = Trace::from_steps(pid, call_text.to_string(), status, raw);
    let stdout = std::mem::take(&mut it.stdout);
    // Break reference cycles so frames and containers are freed here, on the
    // large stack.
    clear_scopes(&it);
    drop(it);
    ExecutionResult {
        status,
        return_value,
        stdout,
        trace,
        error,
    }
}

fn clear_scopes(it: &Interp) {
    let vars = std::mem::take(&mut it.globals.borrow_mut().vars);
    for v in vars.into_values() {
        if let Obj::Func(c) = &v {
            if let Ok(mut s) = c.scope.try_borrow_mut() {
                s.vars.clear();
            }
        }
        drop(v);
    }
    if let Some(t) = &it.traced {
        std::mem::take(&mut t.borrow_mut().vars);
    }
}

/// Outcome of a standalone method call: the method's result and the
/// receiver after any in-place mutation.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub result: Value,
    pub receiver: Value,
}

/// Call `receiver.method(*args)` outside any program.
pub fn call_builtin_method(receiver: &Value, method: &str, args: &[Value]) -> Result<MethodOutcome, ExecError> {
    let mut it = Interp::new(ExecutionLimits::default(), false);
    let recv = Obj::thaw(receiver);
    let argv = args.iter().map(Obj::thaw).collect();
    let r = methods::resolve(&recv, method)
        .map_err(Halt::from)
        .and_then(|name| methods::call_method(&mut it, &recv, name, argv, Vec::new()));
    standalone(r).map(|v| MethodOutcome {
        result: v.freeze(),
        receiver: recv.freeze(),
    })
}

/// Call the free builtin `name(*args)` outside any program.
pub fn call_builtin_function(name: &str, args: &[Value]) -> Result<Value, ExecError> {
    let mut it = Interp::new(ExecutionLimits::default(), false);
    let Some(f) = builtins::lookup(name) else {
        return Err(ExecError {
            kind: "NameError".into(),
            message: format!("name '{name}' is not defined"),
            line: 0,
        });
    };
    let argv = args.iter().map(Obj::thaw).collect();
    standalone(it.call(&f, argv, Vec::new())).map(|v| v.freeze())
}

fn standalone(r: Result<Obj, Halt>) -> Result<Obj, ExecError> {
    r.map_err(|h| {
        let (kind, message) = match h {
            Halt::Exc(e, _) => (e.kind.to_string(), e.msg),
            Halt::Fuel => ("FuelExhausted".into(), String::new()),
            Halt::Output => ("OutputOverflow".into(), String::new()),
        };
        ExecError {
            kind,
            message,
            line: 0,
        }
    })
}
