//! Lexing, parsing and static analysis of the Python subset.

pub mod ast;
pub mod blacklist;
pub mod constraints;
pub mod metrics;
pub mod parser;
pub mod token;

pub use ast::SyntaxTree;
pub use blacklist::{scan_blacklist, Blacklist, BlacklistVerdict};
pub use constraints::{validate_constraints, ConfigError, ConstraintReport, ConstraintSpec};
pub use metrics::{measure_complexity, ComplexityReport};
pub use parser::{parse, parse_expression, ParseError};
pub use token::{tokenize, tokenize_lenient, LexError, Token, TokenKind, TokenStream};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("entry point `{name}` is defined {count} times (expected exactly one)")]
    EntryPoint { name: String, count: usize },
}

/// Program text plus its entry point and verbatim physical lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceProgram {
    pub text: String,
    pub entry_point: String,
    lines: Vec<String>,
}

impl SourceProgram {
    /// Parse `text` and check that `entry_point` names exactly one top-level function.
    pub fn new(text: &str, entry_point: &str) -> Result<(SourceProgram, SyntaxTree), ProgramError> {
        let tree = parse(text)?;
        let count = tree.functions().filter(|f| f.name == entry_point).count();
        if count != 1 {
            return Err(ProgramError::EntryPoint {
                name: entry_point.to_string(),
                count,
            });
        }
        let program = SourceProgram {
            text: text.to_string(),
            entry_point: entry_point.to_string(),
            lines: text.split('\n').map(str::to_owned).collect(),
        };
        Ok((program, tree))
    }

    /// Verbatim text of 1-based line `n`.
    pub fn line(&self, n: u32) -> Option<&str> {
        n.checked_sub(1)
            .and_then(|i| self.lines.get(i as usize))
            .map(String::as_str)
    }

    /// All physical lines; index 0 is line 1.
    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// Number of lines in the numbered listing (a trailing newline adds no line).
    pub fn line_count(&self) -> usize {
        if self.text.ends_with('\n') {
            self.lines.len() - 1
        } else {
            self.lines.len()
        }
    }
}

/// Name of the function invoked by a call expression such as `f(1, 'a')`.
pub fn called_function(call: &str) -> Option<String> {
    let e = parse_expression(call).ok()?;
    match e.kind {
        ast::ExprKind::Call { func, .. } => match func.kind {
            ast::ExprKind::Name(n) => Some(n),
            _ => None,
        },
        _ => None,
    }
}
