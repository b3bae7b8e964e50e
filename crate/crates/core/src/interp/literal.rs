//! Literal reader: turns literal text (as produced by rendering) back into values.

use thiserror::Error;

use crate::syntax::ast::{Constant, Expr, ExprKind, UnaryOp};
use crate::syntax::parse_expression;

use super::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiteralError {
    #[error("not parseable: {0}")]
    Parse(String),
    #[error("not a literal: {0}")]
    NotLiteral(String),
    #[error("unhashable type: '{0}'")]
    Unhashable(&'static str),
}

/// Parse literal text such as `[1, 'a', (2.5,)]`, `{1: None}`, `set()`, `-inf`.
pub fn parse_literal(text: &str) -> Result<Value, LiteralError> {
    let e = parse_expression(text).map_err(|e| LiteralError::Parse(e.to_string()))?;
    literal_from_expr(&e)
}

pub fn literal_from_expr(e: &Expr) -> Result<Value, LiteralError> {
    let not_lit = |what: &str| LiteralError::NotLiteral(what.to_string());
    Ok(match &e.kind {
        ExprKind::Constant(c) => match c {
            Constant::None => Value::None,
            Constant::Bool(b) => Value::Bool(*b),
            Constant::Int(n) => Value::Int(n.clone()),
            Constant::Float(f) => Value::Float(*f),
            Constant::Str(s) => Value::Str(s.clone()),
        },
        ExprKind::Name(n) if n == "inf" => Value::Float(f64::INFINITY),
        ExprKind::Name(n) if n == "nan" => Value::Float(f64::NAN),
        ExprKind::UnaryOp { op, operand } if matches!(op, UnaryOp::Neg | UnaryOp::Pos) => {
            let v = literal_from_expr(operand)?;
            let neg = *op == UnaryOp::Neg;
            match v {
                Value::Int(n) => Value::Int(if neg { -n } else { n }),
                Value::Float(f) => Value::Float(if neg { -f } else { f }),
                Value::Bool(b) => {
                    let n = num_bigint::BigInt::from(b as u8);
                    Value::Int(if neg { -n } else { n })
                }
                _ => return Err(not_lit("unary operator on a non-number")),
            }
        }
        ExprKind::List(xs) => Value::List(xs.iter().map(literal_from_expr).collect::<Result<_, _>>()?),
        ExprKind::Tuple(xs) => {
            Value::Tuple(xs.iter().map(literal_from_expr).collect::<Result<_, _>>()?)
        }
        ExprKind::Set(xs) => {
            let items = xs.iter().map(literal_from_expr).collect::<Result<_, _>>()?;
            Value::set_from(items).map_err(|u| LiteralError::Unhashable(u.0))?
        }
        ExprKind::Dict(pairs) => {
            let mut out = Vec::with_capacity(pairs.len());
            for (k, v) in pairs {
                out.push((literal_from_expr(k)?, literal_from_expr(v)?));
            }
            Value::dict_from(out).map_err(|u| LiteralError::Unhashable(u.0))?
        }
        ExprKind::Call { func, args, keywords } if keywords.is_empty() => {
            let name = match &func.kind {
                ExprKind::Name(n) => n.as_str(),
                _ => return Err(not_lit("call")),
            };
            match (name, args.as_slice()) {
                ("set", []) => Value::Set(Vec::new()),
                ("dict", []) => Value::Dict(Vec::new()),
                ("list", []) => Value::List(Vec::new()),
                ("tuple", []) => Value::Tuple(Vec::new()),
                ("float", [arg]) => match literal_from_expr(arg)? {
                    Value::Str(s) => match s.trim().to_ascii_lowercase().as_str() {
                        "inf" | "+inf" | "infinity" | "+infinity" => Value::Float(f64::INFINITY),
                        "-inf" | "-infinity" => Value::Float(f64::NEG_INFINITY),
                        "nan" | "+nan" | "-nan" => Value::Float(f64::NAN),
                        _ => return Err(not_lit("float() call")),
                    },
                    _ => return Err(not_lit("float() call")),
                },
                _ => return Err(not_lit("call")),
            }
        }
        _ => return Err(not_lit("expression")),
    })
}
