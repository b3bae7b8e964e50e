//! Execution traces: ordered (statement, post-state) pairs and their
//! line-delimited serialization.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Final status of an execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    RuntimeError,
    FuelExhausted,
    OutputOverflow,
    /// The entry call itself could not be parsed or bound; nothing ran.
    CallError,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::RuntimeError => "runtime-error",
            Status::FuelExhausted => "fuel-exhausted",
            Status::OutputOverflow => "output-overflow",
            Status::CallError => "call-error",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One variable in a snapshot: rendered value and type name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarState {
    pub var: String,
    pub val: String,
    pub ty: String,
}

/// Variables of the active frame, sorted by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSnapshot(pub Vec<VarState>);

impl StateSnapshot {
    pub fn get(&self, var: &str) -> Option<&VarState> {
        self.0
            .binary_search_by(|v| v.var.as_str().cmp(var))
            .ok()
            .map(|i| &self.0[i])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// 1-based step index.
    pub t: usize,
    pub line: u32,
    /// How many times `line` has executed so far, this step included.
    pub occ: usize,
    pub stmt: String,
    pub state: StateSnapshot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub program_id: String,
    pub call: String,
    pub status: Status,
    pub steps: Vec<TraceStep>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    program_id: String,
    call: String,
    status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("record {record}: {message}")]
    Malformed { record: usize, message: String },
    #[error("empty trace stream")]
    Empty,
}

impl Trace {
    /// Build a trace from `(line, statement, state)` triples, numbering steps
    /// and occurrences.
    pub fn from_steps(
        program_id: String,
        call: String,
        status: Status,
        raw: Vec<(u32, String, StateSnapshot)>,
    ) -> Trace {
        let mut seen: std::collections::HashMap<u32, usize> = Default::default();
        let steps = raw
            .into_iter()
            .enumerate()
            .map(|(i, (line, stmt, state))| {
                let occ = seen.entry(line).or_insert(0);
                *occ += 1;
                TraceStep {
                    t: i + 1,
                    line,
                    occ: *occ,
                    stmt,
                    state,
                }
            })
            .collect();
        Trace {
            program_id,
            call,
            status,
            steps,
        }
    }

    /// Step with the given line and occurrence.
    pub fn find(&self, line: u32, occ: usize) -> Option<&TraceStep> {
        self.steps.iter().find(|s| s.line == line && s.occ == occ)
    }
}

/// Variables added or changed between two snapshots, sorted by name.
pub fn diff_states(prev: &StateSnapshot, next: &StateSnapshot) -> Vec<VarState> {
    next.0
        .iter()
        .filter(|v| match prev.get(&v.var) {
            Some(old) => old.val != v.val || old.ty != v.ty,
            None => true,
        })
        .cloned()
        .collect()
}

/// Header line followed by one record per step, each newline-terminated.
pub fn serialize_trace(trace: &Trace) -> String {
    let header = Header {
        program_id: trace.program_id.clone(),
        call: trace.call.clone(),
        status: trace.status,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for step in &trace.steps {
        out.push_str(&serde_json::to_string(step).expect("step serializes"));
        out.push('\n');
    }
    out
}

pub fn deserialize_trace(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(TraceError::Empty)?;
    let header: Header = serde_json::from_str(first).map_err(|e| TraceError::Malformed {
        record: 1,
        message: e.to_string(),
    })?;
    let mut steps = Vec::new();
    for (i, line) in lines {
        let step: TraceStep = serde_json::from_str(line).map_err(|e| TraceError::Malformed {
            record: i + 1,
            message: e.to_string(),
        })?;
        if step.t != steps.len() + 1 {
            return Err(TraceError::Malformed {
                record: i + 1,
                message: format!("expected step {}, found {}", steps.len() + 1, step.t),
            });
        }
        steps.push(step);
    }
    Ok(Trace {
        program_id: header.program_id,
        call: header.call,
        status: header.status,
        steps,
    })
}
