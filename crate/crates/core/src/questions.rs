//! White-box questions derived from execution traces, sampling, and the
//! evaluation prompt.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{execute, render_value, ExecutionLimits};
use crate::syntax::ast::{walk_stmt_list, SyntaxTree};
use crate::syntax::SourceProgram;
use crate::trace::{diff_states, Status, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuestionKind {
    CF,
    DF,
}

/// One question with its ground truth. CF questions carry `gt_stmt`, DF
/// questions carry `var`, `gt_val` and `gt_ty`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhiteBoxQuestion {
    pub kind: QuestionKind,
    pub line: u32,
    pub occ: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_val: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_ty: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_stmt: Option<String>,
    pub text: String,
}

impl WhiteBoxQuestion {
    pub fn key(&self) -> (QuestionKind, u32, usize, Option<&str>) {
        (self.kind, self.line, self.occ, self.var.as_deref())
    }
}

/// The fill-the-assertion task that opens every prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoQuestion {
    pub call: String,
    /// Rendered return value of `call`.
    pub expected: String,
    /// Source line holding the driver statement; 0 when the program has none.
    pub driver_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSet {
    pub program_id: String,
    pub io: IoQuestion,
    pub questions: Vec<WhiteBoxQuestion>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuestionError {
    #[error("sample cap must be at least 1")]
    ZeroCap,
    #[error("execution did not succeed: {0}")]
    Execution(String),
    #[error("record {record}: {message}")]
    Malformed { record: usize, message: String },
}

pub const DEFAULT_CAP: usize = 10;

/// English ordinal: 1st, 2nd, 3rd, 4th, 11th, 21st...
pub fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn df_text(var: &str, line: u32, stmt: &str, occ: usize) -> String {
    format!(
        "What is the value and type of the variable `{var}` after Line {line} (`{}`) is executed for the {} time?",
        stmt.trim(),
        ordinal(occ)
    )
}

fn cf_text(line: u32, stmt: &str, occ: usize) -> String {
    format!(
        "Tracing the execution, which line is executed immediately after Line {line} (`{}`) is executed for the {} time?",
        stmt.trim(),
        ordinal(occ)
    )
}

/// Lines of `if`/`elif`/`for`/`while` headers anywhere in the program.
fn header_lines(tree: &SyntaxTree) -> HashSet<u32> {
    let mut out = HashSet::new();
    tree.walk_stmts(&mut |s| {
        if s.kind.is_control_header() {
            out.insert(s.span.line);
        }
    });
    out
}

/// Index of the driver step: the last step outside the entry function's body.
fn driver_step(trace: &Trace, tree: &SyntaxTree, entry: &str) -> Option<usize> {
    let def = tree.function(entry)?;
    let mut body = BTreeSet::new();
    walk_stmt_list(&def.body, &mut |s| {
        body.insert(s.span.line);
    });
    trace.steps.iter().rposition(|s| !body.contains(&s.line))
}

/// Every CF and DF candidate of `trace`, in trace order.
///
/// The driver step (the call of the entry function) is never a target, and
/// no CF question points at it, since its text reveals the expected output.
pub fn generate_questions(
    trace: &Trace,
    program: &SourceProgram,
    tree: &SyntaxTree,
) -> Vec<WhiteBoxQuestion> {
    let mut out = Vec::new();
    if trace.steps.len() < 2 {
        return out;
    }
    let headers = header_lines(tree);
    let driver = driver_step(trace, tree, &program.entry_point);
    let text_of = |line: u32, fallback: &str| program.line(line).unwrap_or(fallback).to_string();
    let mut seen = HashSet::new();
    for (i, step) in trace.steps.iter().enumerate() {
        if Some(i) == driver {
            continue;
        }
        let stmt = text_of(step.line, &step.stmt);
        if i > 0 {
            for v in diff_states(&trace.steps[i - 1].state, &step.state) {
                let q = WhiteBoxQuestion {
                    kind: QuestionKind::DF,
                    line: step.line,
                    occ: step.occ,
                    text: df_text(&v.var, step.line, &stmt, step.occ),
                    var: Some(v.var),
                    gt_val: Some(v.val),
                    gt_ty: Some(v.ty),
                    gt_stmt: None,
                };
                if seen.insert((q.kind, q.line, q.occ, q.var.clone())) {
                    out.push(q);
                }
            }
        }
        let Some(next) = trace.steps.get(i + 1) else { continue };
        if Some(i + 1) == driver || next.line == 0 {
            continue;
        }
        if headers.contains(&step.line) || next.line < step.line {
            let q = WhiteBoxQuestion {
                kind: QuestionKind::CF,
                line: step.line,
                occ: step.occ,
                var: None,
                gt_val: None,
                gt_ty: None,
                gt_stmt: Some(text_of(next.line, &next.stmt)),
                text: cf_text(step.line, &stmt, step.occ),
            };
            if seen.insert((q.kind, q.line, q.occ, None)) {
                out.push(q);
            }
        }
    }
    out
}

/// Shuffle `candidates` with a seeded generator and keep the first `cap`.
pub fn sample_questions(
    mut candidates: Vec<WhiteBoxQuestion>,
    cap: usize,
    seed: u64,
    program_id: String,
    io: IoQuestion,
) -> Result<QuestionSet, QuestionError> {
    if cap == 0 {
        return Err(QuestionError::ZeroCap);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    candidates.truncate(cap);
    Ok(QuestionSet {
        program_id,
        io,
        questions: candidates,
        seed,
    })
}

/// Execute `call`, then generate and sample its questions.
pub fn ask(
    program: &SourceProgram,
    tree: &SyntaxTree,
    call: &str,
    limits: ExecutionLimits,
    cap: usize,
    seed: u64,
) -> Result<QuestionSet, QuestionError> {
    let result = execute(tree, call, limits, true);
    if result.status != Status::Ok {
        let detail = match &result.error {
            Some(e) => format!("{}: {e}", result.status),
            None => result.status.to_string(),
        };
        return Err(QuestionError::Execution(detail));
    }
    let trace = &result.trace;
    let driver_line = driver_step(trace, tree, &program.entry_point)
        .map(|i| trace.steps[i].line)
        .unwrap_or(0);
    let io = IoQuestion {
        call: call.trim().to_string(),
        expected: render_value(result.return_value.as_ref().expect("ok result has a value")),
        driver_line,
    };
    let candidates = generate_questions(trace, program, tree);
    sample_questions(candidates, cap, seed, trace.program_id.clone(), io)
}

#[derive(Serialize, Deserialize)]
struct SetHeader {
    program_id: String,
    seed: u64,
    io: IoQuestion,
}

/// Header record followed by one record per question.
pub fn serialize_question_set(qset: &QuestionSet) -> String {
    let header = SetHeader {
        program_id: qset.program_id.clone(),
        seed: qset.seed,
        io: qset.io.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for q in &qset.questions {
        out.push_str(&serde_json::to_string(q).expect("question serializes"));
        out.push('\n');
    }
    out
}

pub fn deserialize_question_set(text: &str) -> Result<QuestionSet, QuestionError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let malformed = |record: usize, e: serde_json::Error| QuestionError::Malformed {
        record,
        message: e.to_string(),
    };
    let (_, first) = lines.next().ok_or(QuestionError::Malformed {
        record: 1,
        message: "empty stream".into(),
    })?;
    let header: SetHeader = serde_json::from_str(first).map_err(|e| malformed(1, e))?;
    let mut questions = Vec::new();
    for (i, line) in lines {
        questions.push(serde_json::from_str(line).map_err(|e| malformed(i + 1, e))?);
    }
    Ok(QuestionSet {
        program_id: header.program_id,
        io: header.io,
        questions,
        seed: header.seed,
    })
}

/// Listing lines with the driver's expected value masked.
fn masked_listing(program: &SourceProgram, io: &IoQuestion) -> Vec<String> {
    let mut lines: Vec<String> = program.lines()[..program.line_count()].to_vec();
    let masked = |indent: &str| format!("{indent}assert {} == ????", io.call);
    match (io.driver_line as usize).checked_sub(1) {
        Some(i) if i < lines.len() => {
            let indent: String = lines[i].chars().take_while(|c| c.is_whitespace()).collect();
            lines[i] = masked(&indent);
        }
        _ => lines.push(masked("")),
    }
    lines
}

/// The evaluation prompt: numbered listing, Question1 (fill the assertion),
/// the white-box questions, guidelines and the answer scaffold.
pub fn render_prompt(program: &SourceProgram, qset: &QuestionSet) -> String {
    let mut p = String::new();
    p.push_str("You are a programming expert.\n");
    p.push_str("Your task is to analyze the Python code and answer the questions by simulating the execution step by step.\n\n");
    p.push_str("Here is the code content:\n");
    for (i, line) in masked_listing(program, &qset.io).iter().enumerate() {
        let _ = writeln!(p, "{:<3} {line}", i + 1);
    }
    p.push_str("\nHere are the questions:\n");
    p.push_str("Question1: Fill the assertion statement.\n");
    for (i, q) in qset.questions.iter().enumerate() {
        let _ = writeln!(p, "Question{}: {}", i + 2, q.text);
    }
    let has_cf = qset.questions.iter().any(|q| q.kind == QuestionKind::CF);
    let has_df = qset.questions.iter().any(|q| q.kind == QuestionKind::DF);
    if has_cf {
        p.push_str("\nGuidelines for \u{201c}next statement\u{201d} questions:\n");
        p.push_str("- Determine the next line executed after the given statement.\n");
        p.push_str("- CRITICAL: Your answer MUST be the exact, verbatim source code of the next line \u{2014} copied character-for-character, including indentation.\n");
        p.push_str("- Do NOT include line numbers, quotes, backticks, comments, or any extra words.\n");
    }
    if has_df {
        p.push_str("\nGuidelines for \u{201c}type & value\u{201d} questions:\n");
        p.push_str("- STRICT FORMAT: value; type (Exactly one semicolon and one space).\n");
        p.push_str("- Example: 1; int    'hello'; str    [1, 2]; list\n");
    }
    p.push_str("\nABSOLUTE FORMAT RULES (MUST FOLLOW):\n");
    p.push_str("- Output all answers one per line and in the listed order.\n");
    if has_cf {
        p.push_str("- For \u{201c}next statement\u{201d} answers: output ONLY the code statement string. Do not output line numbers!\n");
    }
    p.push_str("\nFormat your response strictly as follows:\n");
    p.push_str("<reasoning>\nyour step-by-step reasoning here\n</reasoning>\n<answer>\n");
    let total = qset.questions.len() + 1;
    if total == 1 {
        p.push_str("Answer for question1\n");
    } else {
        p.push_str("Answer for question1\n...\n");
        let _ = writeln!(p, "Answer for question{total}");
    }
    p.push_str("</answer>\n");
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals() {
        let got: Vec<String> = [1, 2, 3, 4, 11, 12, 13, 21, 22, 101, 111].iter().map(|&n| ordinal(n)).collect();
        assert_eq!(
            got,
            ["1st", "2nd", "3rd", "4th", "11th", "12th", "13th", "21st", "22nd", "101st", "111th"]
        );
    }

    #[test]
    fn straight_line_has_no_cf() {
        let text = "def f():\n    x = 1\n    return x\nf()";
        let (p, tree) = SourceProgram::new(text, "f").unwrap();
        let qs = ask(&p, &tree, "f()", ExecutionLimits::default(), 10, 0).unwrap();
        assert!(qs.questions.iter().all(|q| q.kind == QuestionKind::DF));
        assert_eq!(qs.questions.len(), 1);
        assert_eq!(qs.io.driver_line, 4);
    }

    #[test]
    fn sampling_is_seeded() {
        let text = "def f(n):\n    t = 0\n    for i in range(n):\n        t += i\n    return t\nf(9)";
        let (p, tree) = SourceProgram::new(text, "f").unwrap();
        let a = ask(&p, &tree, "f(9)", ExecutionLimits::default(), 10, 7).unwrap();
        let b = ask(&p, &tree, "f(9)", ExecutionLimits::default(), 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.questions.len(), 10);
        let back = deserialize_question_set(&serialize_question_set(&a)).unwrap();
        assert_eq!(back, a);
        assert_eq!(sample_questions(vec![], 0, 1, "x".into(), a.io.clone()), Err(QuestionError::ZeroCap));
    }
}
