//! Answer parsing, per-question verification and reward scalars.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::interp::{execute, parse_literal, EntryCall, ExecutionLimits, Value};
use crate::questions::{QuestionKind, QuestionSet, WhiteBoxQuestion};
use crate::syntax::{called_function, SourceProgram, SyntaxTree};
use crate::trace::Status;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("no <answer> block in completion")]
    NoAnswerBlock,
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("test count must be at least 1")]
    NoTests,
    #[error("passed ({passed}) exceeds total ({total})")]
    TooManyPassed { passed: usize, total: usize },
}

/// Answers extracted from a completion. `wb_answers` is positional; a
/// question without a line has no entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeAnswers {
    pub io_answer: String,
    pub wb_answers: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub alpha: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig { alpha: 0.5 }
    }
}

impl RewardConfig {
    pub fn new(alpha: f64) -> Result<RewardConfig, RewardError> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(RewardConfig { alpha })
        } else {
            Err(RewardError::Alpha(alpha))
        }
    }
}

/// Answer-matching switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// When false, CF answers also match after stripping leading whitespace.
    pub strict_cf: bool,
    /// When true, DF values must match as strings exactly.
    pub strict_df: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            strict_cf: true,
            strict_df: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub r_io: f64,
    pub r_white: f64,
    pub r_whitebox: f64,
    pub verdicts: Vec<bool>,
}

/// Content of the last complete `<answer>...</answer>` region, split into
/// non-blank lines: the first is the I/O answer, the rest white-box answers.
pub fn parse_answer_block(completion: &str) -> Result<EpisodeAnswers, RewardError> {
    let end = completion.rfind("</answer>").ok_or(RewardError::NoAnswerBlock)?;
    let start = completion[..end].rfind("<answer>").ok_or(RewardError::NoAnswerBlock)?;
    let body = &completion[start + "<answer>".len()..end];
    let mut lines = body
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.trim().is_empty());
    let io_answer = lines.next().map(|l| l.trim().to_string()).unwrap_or_default();
    Ok(EpisodeAnswers {
        io_answer,
        wb_answers: lines.map(str::to_string).collect(),
    })
}

pub fn verify_cf_answer(answer: &str, ground_truth: &str, strict: bool) -> bool {
    let a = answer.strip_suffix('\n').unwrap_or(answer);
    let a = a.strip_suffix('\r').unwrap_or(a);
    a == ground_truth || (!strict && a.trim_start() == ground_truth.trim_start())
}

/// `value; type`, split on the last `"; "`. Values match exactly, or (unless
/// `strict`) when both sides read as the same literal.
pub fn verify_df_answer(answer: &str, gt_value: &str, gt_type: &str, strict: bool) -> bool {
    let a = answer.trim_end_matches(['\n', '\r']);
    let Some((value, ty)) = a.rsplit_once("; ") else {
        return false;
    };
    if ty != gt_type {
        return false;
    }
    if value == gt_value {
        return true;
    }
    !strict
        && match (parse_literal(value.trim()), parse_literal(gt_value)) {
            (Ok(x), Ok(y)) => x.same_literal(&y),
            _ => false,
        }
}

pub fn verify_question(q: &WhiteBoxQuestion, answer: Option<&str>, opts: VerifyOptions) -> bool {
    let Some(answer) = answer else { return false };
    match q.kind {
        QuestionKind::CF => q
            .gt_stmt
            .as_deref()
            .is_some_and(|gt| verify_cf_answer(answer, gt, opts.strict_cf)),
        QuestionKind::DF => match (&q.gt_val, &q.gt_ty) {
            (Some(v), Some(t)) => verify_df_answer(answer, v, t, opts.strict_df),
            _ => false,
        },
    }
}

/// 1 when `predicted` reads as a literal equal (under `==`) to `expected`.
pub fn reward_io(predicted: &str, expected: &Value) -> u8 {
    match parse_literal(predicted.trim()) {
        Ok(v) if v.py_eq(expected) => 1,
        _ => 0,
    }
}

/// Mean of the verdicts; `None` for an empty question set.
pub fn reward_white(verdicts: &[bool]) -> Option<f64> {
    if verdicts.is_empty() {
        return None;
    }
    let hits = verdicts.iter().filter(|&&v| v).count();
    Some(hits as f64 / verdicts.len() as f64)
}

/// `2 * ((1 - alpha) * r_io + alpha * r_white)`, evaluated exactly and rounded
/// once to the nearest float. Non-finite inputs give NaN.
pub fn reward_whitebox(r_io: f64, r_white: f64, cfg: RewardConfig) -> f64 {
    let (Some(a), Some(io), Some(white)) = (
        BigRational::from_float(cfg.alpha),
        BigRational::from_float(r_io),
        BigRational::from_float(r_white),
    ) else {
        return f64::NAN;
    };
    let one = BigRational::one();
    let v = BigRational::from_integer(2.into()) * ((&one - &a) * io + a * white);
    nearest_f64(&v)
}

/// Round an exact rational to the nearest float, ties to even.
fn nearest_f64(q: &BigRational) -> f64 {
    let guess = q.to_f64().unwrap_or(f64::NAN);
    if !guess.is_finite() {
        return guess;
    }
    let dist = |c: f64| BigRational::from_float(c).map(|x| (x - q).abs());
    let mut best = guess;
    let mut best_d = dist(guess);
    for c in [guess.next_down(), guess.next_up()] {
        let d = dist(c);
        let closer = match (&d, &best_d) {
            (Some(d), Some(b)) => d < b || (d == b && c.to_bits() & 1 == 0),
            _ => false,
        };
        if closer {
            best = c;
            best_d = d;
        }
    }
    best
}

/// 2 when executing `predicted_call` returns `expected`, else 0.
pub fn reward_oi(
    program: &SourceProgram,
    tree: &SyntaxTree,
    predicted_call: &str,
    expected: &Value,
    limits: ExecutionLimits,
) -> u8 {
    match EntryCall::parse(predicted_call.trim()) {
        Ok(c) if c.function == program.entry_point => {}
        _ => return 0,
    }
    let r = execute(tree, predicted_call.trim(), limits, false);
    match (&r.status, &r.return_value) {
        (Status::Ok, Some(v)) if v.py_eq(expected) => 2,
        _ => 0,
    }
}

pub fn reward_gen(passed: usize, total: usize) -> Result<f64, RewardError> {
    if total == 0 {
        return Err(RewardError::NoTests);
    }
    if passed > total {
        return Err(RewardError::TooManyPassed { passed, total });
    }
    Ok(passed as f64 / total as f64)
}

/// Score a white-box episode. Without questions the episode is scored as
/// pure I/O (`2 * r_io`).
pub fn score_whitebox(
    qset: &QuestionSet,
    expected: &Value,
    completion: &str,
    cfg: RewardConfig,
    opts: VerifyOptions,
) -> EpisodeScore {
    let answers = parse_answer_block(completion).ok();
    let r_io = answers
        .as_ref()
        .map_or(0, |a| reward_io(&a.io_answer, expected)) as f64;
    let verdicts: Vec<bool> = qset
        .questions
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let ans = answers.as_ref().and_then(|a| a.wb_answers.get(i)).map(String::as_str);
            verify_question(q, ans, opts)
        })
        .collect();
    match reward_white(&verdicts) {
        Some(r_white) => EpisodeScore {
            r_io,
            r_white,
            r_whitebox: reward_whitebox(r_io, r_white, cfg),
            verdicts,
        },
        None => EpisodeScore {
            r_io,
            r_white: 0.0,
            r_whitebox: 2.0 * r_io,
            verdicts,
        },
    }
}

// ---------------------------------------------------------------------------
// Batch records

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Whitebox,
    Oi,
    Io,
    Gen,
}

/// One unit test for `gen` mode: a call and its expected return literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitTest {
    pub call: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub episode_id: Json,
    #[serde(default)]
    pub program: String,
    #[serde(default)]
    pub entry_call: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub qset: Option<QuestionSet>,
    #[serde(default)]
    pub completion: String,
    /// Falls back to the batch default when absent.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub tests: Option<Vec<UnitTest>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub episode_id: Json,
    pub r_io: Option<f64>,
    pub r_white: Option<f64>,
    pub reward: f64,
    pub verdicts: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFailure {
    pub episode_id: Json,
    pub error: String,
}

/// Defaults applied to every record of a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchConfig {
    pub mode: Option<Mode>,
    pub alpha: f64,
    pub verify: VerifyOptions,
    pub limits: ExecutionLimits,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            mode: None,
            alpha: 0.5,
            verify: VerifyOptions::default(),
            limits: ExecutionLimits::default(),
        }
    }
}

fn load_program(text: &str, call: &str) -> Result<(SourceProgram, SyntaxTree), String> {
    let entry = called_function(call).ok_or_else(|| format!("entry_call is not a call: {call:?}"))?;
    SourceProgram::new(text, &entry).map_err(|e| e.to_string())
}

fn expected_of(tree: &SyntaxTree, call: &str, limits: ExecutionLimits) -> Result<Value, String> {
    let r = execute(tree, call, limits, false);
    match (r.status, r.return_value) {
        (Status::Ok, Some(v)) => Ok(v),
        (status, _) => Err(match r.error {
            Some(e) => format!("reference execution failed ({status}): {e}"),
            None => format!("reference execution failed ({status})"),
        }),
    }
}

/// Code submitted in a completion: the last fenced block, else the answer
/// block, else the whole text.
fn extract_code(completion: &str) -> String {
    if let Some(end) = completion.rfind("```") {
        if let Some(start) = completion[..end].rfind("```") {
            let block = &completion[start + 3..end];
            let block = block.split_once('\n').map_or("", |(first, rest)| {
                if first.trim().chars().all(|c| c.is_ascii_alphanumeric()) {
                    rest
                } else {
                    block
                }
            });
            return block.to_string();
        }
    }
    if let (Some(end), true) = (completion.rfind("</answer>"), completion.contains("<answer>")) {
        if let Some(start) = completion[..end].rfind("<answer>") {
            return completion[start + 8..end].trim_matches('\n').to_string();
        }
    }
    completion.to_string()
}

fn score_gen(req: &ScoreRequest, cfg: &BatchConfig) -> Result<ScoreResponse, String> {
    let tests = req.tests.as_ref().filter(|t| !t.is_empty()).ok_or("gen mode needs tests")?;
    let code = if req.completion.trim().is_empty() {
        req.program.clone()
    } else {
        extract_code(&req.completion)
    };
    let tree = crate::syntax::parse(&code).ok();
    let verdicts: Vec<bool> = tests
        .iter()
        .map(|t| {
            let Some(tree) = &tree else { return false };
            let Ok(want) = parse_literal(t.expected.trim()) else { return false };
            let r = execute(tree, &t.call, cfg.limits, false);
            matches!((&r.status, &r.return_value), (Status::Ok, Some(v)) if v.py_eq(&want))
        })
        .collect();
    let passed = verdicts.iter().filter(|&&v| v).count();
    let reward = reward_gen(passed, verdicts.len()).map_err(|e| e.to_string())?;
    Ok(ScoreResponse {
        episode_id: req.episode_id.clone(),
        r_io: None,
        r_white: None,
        reward,
        verdicts,
    })
}

/// Score one request.
pub fn score_request(req: &ScoreRequest, cfg: &BatchConfig) -> Result<ScoreResponse, String> {
    let alpha = req.alpha.unwrap_or(cfg.alpha);
    let rcfg = RewardConfig::new(alpha).map_err(|e| e.to_string())?;
    let mode = req.mode.or(cfg.mode).ok_or("record has no mode and no default was given")?;
    if mode == Mode::Gen {
        return score_gen(req, cfg);
    }
    let (program, tree) = load_program(&req.program, &req.entry_call)?;
    let expected = expected_of(&tree, &req.entry_call, cfg.limits)?;
    let id = req.episode_id.clone();
    match mode {
        Mode::Whitebox => {
            let empty;
            let qset = match &req.qset {
                Some(q) => q,
                None => {
                    empty = QuestionSet {
                        program_id: String::new(),
                        io: crate::questions::IoQuestion {
                            call: req.entry_call.clone(),
                            expected: expected.render(),
                            driver_line: 0,
                        },
                        questions: Vec::new(),
                        seed: 0,
                    };
                    &empty
                }
            };
            let s = score_whitebox(qset, &expected, &req.completion, rcfg, cfg.verify);
            let r_white = (!s.verdicts.is_empty()).then_some(s.r_white);
            Ok(ScoreResponse {
                episode_id: id,
                r_io: Some(s.r_io),
                r_white,
                reward: s.r_whitebox,
                verdicts: s.verdicts,
            })
        }
        Mode::Io => {
            let r = parse_answer_block(&req.completion)
                .map_or(0, |a| reward_io(&a.io_answer, &expected)) as f64;
            Ok(ScoreResponse {
                episode_id: id,
                r_io: Some(r),
                r_white: None,
                reward: r,
                verdicts: Vec::new(),
            })
        }
        Mode::Oi => {
            let r = parse_answer_block(&req.completion)
                .map_or(0, |a| reward_oi(&program, &tree, &a.io_answer, &expected, cfg.limits));
            Ok(ScoreResponse {
                episode_id: id,
                r_io: Some(f64::from(r) / 2.0),
                r_white: None,
                reward: f64::from(r),
                verdicts: Vec::new(),
            })
        }
        Mode::Gen => unreachable!(),
    }
}

/// Score one wire record; the result is a response or failure object.
pub fn score_line(line: &str, cfg: &BatchConfig) -> Json {
    let raw: Json = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            return serde_json::to_value(ScoreFailure {
                episode_id: Json::Null,
                error: format!("malformed record: {e}"),
            })
            .expect("serializes")
        }
    };
    let id = raw.get("episode_id").cloned().unwrap_or(Json::Null);
    let out = serde_json::from_value::<ScoreRequest>(raw)
        .map_err(|e| format!("malformed record: {e}"))
        .and_then(|req| score_request(&req, cfg));
    match out {
        Ok(resp) => serde_json::to_value(resp),
        Err(error) => serde_json::to_value(ScoreFailure { episode_id: id, error }),
    }
    .expect("serializes")
}

/// Score many records in parallel; output order follows input order.
pub fn score_batch(lines: &[String], cfg: &BatchConfig) -> Vec<Json> {
    lines.par_iter().map(|l| score_line(l, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_block() {
        let c = "<reasoning>x</reasoning>\n<answer>\n'  hello world'\n'  hello world'; str\n</answer>";
        let a = parse_answer_block(c).unwrap();
        assert_eq!(a.io_answer, "'  hello world'");
        assert_eq!(a.wb_answers, vec!["'  hello world'; str"]);
        assert_eq!(parse_answer_block("nothing"), Err(RewardError::NoAnswerBlock));
        let two = "<answer>\n1\n</answer> <answer>\n2\n</answer>";
        assert_eq!(parse_answer_block(two).unwrap().io_answer, "2");
    }

    #[test]
    fn cf_and_df() {
        let gt = "            result = result.rstrip(char)";
        assert!(verify_cf_answer(gt, gt, true));
        assert!(!verify_cf_answer("result = result.rstrip(char)", gt, true));
        assert!(verify_cf_answer("result = result.rstrip(char)", gt, false));
        assert!(!verify_cf_answer("9", gt, true));
        assert!(verify_df_answer("'  hello world'; str", "'  hello world'", "str", false));
        assert!(verify_df_answer("[1,2]; list", "[1, 2]", "list", false));
        assert!(!verify_df_answer("[1,2]; list", "[1, 2]", "list", true));
        assert!(!verify_df_answer("1; float", "1", "int", false));
        assert!(!verify_df_answer("'1'; str", "1", "str", false));
        assert!(verify_df_answer("'a; b'; str", "'a; b'", "str", false));
    }

    #[test]
    fn scalars() {
        assert_eq!(reward_white(&[true, true, false, true]), Some(0.75));
        assert_eq!(reward_white(&[]), None);
        let half = RewardConfig::default();
        assert!((reward_whitebox(1.0, 0.8, half) - 1.8).abs() < 1e-15);
        assert_eq!(reward_whitebox(0.0, 0.0, half), 0.0);
        assert_eq!(reward_whitebox(1.0, 1.0, RewardConfig::new(0.25).unwrap()), 2.0);
        assert_eq!(reward_gen(3, 4), Ok(0.75));
        assert_eq!(reward_gen(0, 10), Ok(0.0));
        assert_eq!(reward_gen(1, 0), Err(RewardError::NoTests));
        assert!(RewardConfig::new(1.5).is_err());
    }

    #[test]
    fn io_literals() {
        let empty = parse_literal("''").unwrap();
        assert_eq!(reward_io("''", &empty), 1);
        let hw = parse_literal("'  hello world'").unwrap();
        assert_eq!(reward_io("\"  hello world\"", &hw), 1);
        let pair = parse_literal("(1.0, 2.0)").unwrap();
        assert_eq!(reward_io("(1.0, 1.0)", &pair), 0);
        assert_eq!(reward_io("not a literal", &pair), 0);
    }
}
