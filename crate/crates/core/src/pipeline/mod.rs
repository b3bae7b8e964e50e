//! Dataset construction: input mutation, execution and difficulty filters,
//! contamination scanning, library I/O cases and corpus statistics.

pub mod contamination;
pub mod filter;
pub mod library;
pub mod mutate;
pub mod oracle;
pub mod stats;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::interp::{execute, render_value, ExecutionLimits, ExecutionResult};
use crate::syntax::{called_function, ProgramError, SourceProgram, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Raw,
    Mutated,
}

/// One program with one input call and its expected output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInstance {
    pub id: String,
    pub code: String,
    pub call: String,
    /// Rendered return value of `call`; may be empty before the first run.
    #[serde(default)]
    pub expected: String,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("`{0}` is not a call of a named function")]
    NotACall(String),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("{0}")]
    Config(String),
}

impl DatasetInstance {
    /// Parse the program, taking the entry point from the call.
    pub fn load(&self) -> Result<(SourceProgram, SyntaxTree), PipelineError> {
        let entry = called_function(&self.call).ok_or_else(|| PipelineError::NotACall(self.call.clone()))?;
        Ok(SourceProgram::new(&self.code, &entry)?)
    }

    pub fn run(&self, limits: ExecutionLimits) -> Result<ExecutionResult, PipelineError> {
        let (_, tree) = self.load()?;
        Ok(execute(&tree, &self.call, limits, true))
    }

    /// Copy with `expected` refreshed from an execution, if it succeeded.
    pub fn with_expected(&self, result: &ExecutionResult) -> DatasetInstance {
        let mut out = self.clone();
        if let Some(v) = &result.return_value {
            out.expected = render_value(v);
        }
        out
    }
}

/// Seed for per-instance randomness, independent of processing order.
pub(crate) fn derive_seed(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
