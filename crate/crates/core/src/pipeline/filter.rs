//! Execution and difficulty filters.

use serde::{Deserialize, Serialize};

use super::oracle::{OracleRequest, SolverOracle};
use super::{DatasetInstance, PipelineError};
use crate::interp::{execute, render_value, ExecutionLimits};
use crate::rewards::reward_io;
use crate::trace::Status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    RuntimeError,
    FuelExhausted,
    OutputOverflow,
    /// The program or its call failed to parse or bind.
    ParseError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum ExecVerdict {
    /// Carries the instance with `expected` refreshed.
    Keep { instance: DatasetInstance },
    Drop { reason: DropReason, detail: String },
}

pub fn filter_execution(instance: &DatasetInstance, limits: ExecutionLimits) -> ExecVerdict {
    let r = match instance.run(limits) {
        Ok(r) => r,
        Err(e) => {
            return ExecVerdict::Drop {
                reason: DropReason::ParseError,
                detail: e.to_string(),
            }
        }
    };
    let reason = match r.status {
        Status::Ok => {
            return ExecVerdict::Keep {
                instance: instance.with_expected(&r),
            }
        }
        Status::RuntimeError => DropReason::RuntimeError,
        Status::FuelExhausted => DropReason::FuelExhausted,
        Status::OutputOverflow => DropReason::OutputOverflow,
        Status::CallError => DropReason::ParseError,
    };
    ExecVerdict::Drop {
        reason,
        detail: r.error.map(|e| e.to_string()).unwrap_or_default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyVerdict {
    pub keep: bool,
    pub pass_count: u32,
}

/// Run `oracle` `trials` times; keep when at most `max_pass` predictions are
/// correct under the I/O reward.
pub fn filter_difficulty(
    instance: &DatasetInstance,
    oracle: &dyn SolverOracle,
    trials: u32,
    max_pass: u32,
    seed: u64,
    limits: ExecutionLimits,
) -> Result<DifficultyVerdict, PipelineError> {
    if trials == 0 {
        return Err(PipelineError::Config("trials must be at least 1".into()));
    }
    let (_, tree) = instance.load()?;
    let r = execute(&tree, &instance.call, limits, false);
    let expected = match (r.status, r.return_value) {
        (Status::Ok, Some(v)) => v,
        (status, _) => {
            return Err(PipelineError::Config(format!(
                "instance {} does not execute ({status})",
                instance.id
            )))
        }
    };
    let reference = render_value(&expected);
    let req = OracleRequest {
        code: &instance.code,
        masked_call: format!("assert {} == ????", instance.call.trim()),
        reference: &reference,
    };
    let pass_count = (0..trials)
        .filter(|&t| {
            oracle
                .predict(&req, seed, t)
                .is_some_and(|p| reward_io(&p, &expected) == 1)
        })
        .count() as u32;
    Ok(DifficultyVerdict {
        keep: pass_count <= max_pass,
        pass_count,
    })
}
