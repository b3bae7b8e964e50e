//! Independent re-checks shared by the property suite and the acceptance gate.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use stepwise::interp::{execute, ExecutionLimits};
use stepwise::questions::{generate_questions, QuestionKind};
use stepwise::rewards::{reward_whitebox, RewardConfig};
use stepwise::syntax::SourceProgram;
use stepwise::trace::Status;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// The float reward lies within one ulp of the exact rational value, inside
/// [0, 2], and degenerates correctly at alpha 0 and 1.
pub fn check_reward(alpha: f64, r_io: f64, r_white: f64) -> Result<(), String> {
    let got = reward_whitebox(r_io, r_white, RewardConfig::new(alpha).map_err(|e| e.to_string())?);
    let one = BigRational::from_integer(BigInt::from(1));
    let two = BigRational::from_integer(BigInt::from(2));
    let want = &two * ((&one - exact(alpha)) * exact(r_io) + exact(alpha) * exact(r_white));
    let ulp = exact(f64::from_bits(got.to_bits() + 1) - got);
    let diff = exact(got) - &want;
    let diff = if diff < BigRational::from_integer(BigInt::from(0)) { -diff } else { diff };
    if diff > ulp {
        return Err(format!("alpha={alpha} r_io={r_io} r_white={r_white}: {got} off by more than 1 ulp"));
    }
    if !(0.0..=2.0).contains(&got) {
        return Err(format!("{got} outside [0, 2]"));
    }
    if alpha == 0.0 && got != 2.0 * r_io {
        return Err(format!("alpha=0 gives {got}, not 2*r_io"));
    }
    if alpha == 1.0 && got != 2.0 * r_white {
        return Err(format!("alpha=1 gives {got}, not 2*r_white"));
    }
    Ok(())
}

/// Nondecreasing in both rewards.
pub fn check_monotone(alpha: f64, w1: f64, w2: f64) -> Result<(), String> {
    let cfg = RewardConfig::new(alpha).map_err(|e| e.to_string())?;
    let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
    for r_io in [0.0, 1.0] {
        if reward_whitebox(r_io, lo, cfg) > reward_whitebox(r_io, hi, cfg) {
            return Err(format!("not monotone in r_white at alpha={alpha}"));
        }
    }
    for w in [lo, hi] {
        if reward_whitebox(0.0, w, cfg) > reward_whitebox(1.0, w, cfg) {
            return Err(format!("not monotone in r_io at alpha={alpha}"));
        }
    }
    Ok(())
}

fn is_header(text: &str) -> bool {
    let t = text.trim_start();
    ["if ", "elif ", "for ", "while "].iter().any(|k| t.starts_with(k))
}

/// Re-derive every question's trigger and ground truth from the raw trace.
/// Returns the number of questions checked.
pub fn check_questions(code: &str, call: &str) -> Result<usize, String> {
    let (program, tree) = SourceProgram::new(code, "f").map_err(|e| e.to_string())?;
    let r = execute(&tree, call, ExecutionLimits::default(), true);
    if r.status != Status::Ok {
        return Err(format!("execution failed: {:?}", r.error));
    }
    let steps = &r.trace.steps;
    let qs = generate_questions(&r.trace, &program, &tree);
    let mut keys = HashSet::new();
    for q in &qs {
        if !keys.insert((q.kind, q.line, q.occ, q.var.clone())) {
            return Err(format!("duplicate key {:?}", (q.kind, q.line, q.occ, &q.var)));
        }
        let i = steps
            .iter()
            .position(|s| s.line == q.line && s.occ == q.occ)
            .ok_or("question names a step that never ran")?;
        let text = program.line(q.line).ok_or("line out of range")?;
        match q.kind {
            QuestionKind::CF => {
                let next = steps.get(i + 1).ok_or("CF target is the last step")?;
                if !(is_header(text) || next.line < q.line) {
                    return Err(format!("CF at line {} has no trigger", q.line));
                }
                if q.gt_stmt.as_deref() != program.line(next.line) {
                    return Err(format!("CF ground truth mismatch at line {}", q.line));
                }
            }
            QuestionKind::DF => {
                let var = q.var.as_deref().ok_or("DF without variable")?;
                let now = steps[i].state.get(var).ok_or("variable missing from snapshot")?;
                if q.gt_val.as_deref() != Some(now.val.as_str()) || q.gt_ty.as_deref() != Some(now.ty.as_str()) {
                    return Err(format!("DF ground truth mismatch for {var}"));
                }
                let before = i.checked_sub(1).map(|p| steps[p].state.get(var));
                match before {
                    None => return Err("DF on the first step".into()),
                    Some(Some(old)) if old.val == now.val && old.ty == now.ty => {
                        return Err(format!("DF on unchanged {var} at line {}", q.line))
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(qs.len())
}
