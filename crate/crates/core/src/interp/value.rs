//! Frozen runtime values.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::num::{cmp_int_float, float_to_big};
use super::render::{float_repr, str_repr};

/// A deep-copied value of one of the nine supported built-in types. Values of
/// any other runtime type (functions, iterators, ranges) are kept as their
/// rendered text in `Opaque`.
#[derive(Debug, Clone)]
pub enum Value {
    None,
    Bool(bool),
    Int(BigInt),
    Float(f64),
    Str(String),
    List(Vec<Value>),
    Tuple(Vec<Value>),
    /// Members in canonical order (sorted by rendered text).
    Set(Vec<Value>),
    /// Entries in insertion order.
    Dict(Vec<(Value, Value)>),
    Opaque { ty: String, repr: String },
}

/// Hash identity shared by set members and dict keys: `1`, `1.0` and `True`
/// collapse to the same key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HashKey {
    None,
    Int(BigInt),
    /// Non-integral float, by bit pattern.
    Float(u64),
    Str(String),
    Tuple(Vec<HashKey>),
    /// Objects hashed by identity or name (functions, types).
    Ident(String),
}

impl HashKey {
    pub fn from_float(f: f64) -> HashKey {
        if f.is_finite() && f.fract() == 0.0 {
            HashKey::Int(float_to_big(f).expect("finite"))
        } else {
            HashKey::Float(f.to_bits())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unhashable(pub &'static str);

/// Error raised when a rendering exceeds its character budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOverflow;

impl Value {
    pub fn type_name(&self) -> &str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Tuple(_) => "tuple",
            Value::Set(_) => "set",
            Value::Dict(_) => "dict",
            Value::Opaque { ty, .. } => ty,
        }
    }

    pub fn hash_key(&self) -> Result<HashKey, Unhashable> {
        Ok(match self {
            Value::None => HashKey::None,
            Value::Bool(b) => HashKey::Int(BigInt::from(*b as u8)),
            Value::Int(n) => HashKey::Int(n.clone()),
            Value::Float(f) => HashKey::from_float(*f),
            Value::Str(s) => HashKey::Str(s.clone()),
            Value::Tuple(xs) => HashKey::Tuple(
                xs.iter()
                    .map(Value::hash_key)
                    .collect::<Result<_, _>>()?,
            ),
            Value::List(_) => return Err(Unhashable("list")),
            Value::Set(_) => return Err(Unhashable("set")),
            Value::Dict(_) => return Err(Unhashable("dict")),
            Value::Opaque { repr, .. } => HashKey::Ident(repr.clone()),
        })
    }

    /// Build a set value: deduplicate under hash semantics (first occurrence
    /// wins) and sort into canonical order.
    pub fn set_from(items: Vec<Value>) -> Result<Value, Unhashable> {
        let mut seen = std::collections::HashSet::new();
        let mut keyed = Vec::new();
        for v in items {
            if seen.insert(v.hash_key()?) {
                keyed.push((v.render(), v));
            }
        }
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Value::Set(keyed.into_iter().map(|(_, v)| v).collect()))
    }

    /// Build a dict value: later duplicates overwrite the value but keep the
    /// first key object and its position.
    pub fn dict_from(pairs: Vec<(Value, Value)>) -> Result<Value, Unhashable> {
        let mut index: std::collections::HashMap<HashKey, usize> = Default::default();
        let mut out: Vec<(Value, Value)> = Vec::new();
        for (k, v) in pairs {
            let h = k.hash_key()?;
            match index.get(&h) {
                Some(&i) => out[i].1 = v,
                None => {
                    index.insert(h, out.len());
                    out.push((k, v));
                }
            }
        }
        Ok(Value::Dict(out))
    }

    /// Canonical text, unbounded.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = self.render_into(&mut out, usize::MAX);
        out
    }

    /// Canonical text, failing once it exceeds `cap` characters.
    pub fn render_capped(&self, cap: usize) -> Result<String, RenderOverflow> {
        let mut out = String::new();
        self.render_into(&mut out, cap)?;
        if out.chars().count() > cap {
            return Err(RenderOverflow);
        }
        Ok(out)
    }

    fn render_into(&self, out: &mut String, cap: usize) -> Result<(), RenderOverflow> {
        if out.len() > cap.saturating_mul(4) {
            return Err(RenderOverflow);
        }
        match self {
            Value::None => out.push_str("None"),
            Value::Bool(true) => out.push_str("True"),
            Value::Bool(false) => out.push_str("False"),
            Value::Int(n) => out.push_str(&n.to_string()),
            Value::Float(f) => out.push_str(&float_repr(*f)),
            Value::Str(s) => str_repr(s, out),
            Value::List(xs) => {
                out.push('[');
                render_seq(xs, out, cap)?;
                out.push(']');
            }
            Value::Tuple(xs) => {
                out.push('(');
                render_seq(xs, out, cap)?;
                if xs.len() == 1 {
                    out.push(',');
                }
                out.push(')');
            }
            Value::Set(xs) if xs.is_empty() => out.push_str("set()"),
            Value::Set(xs) => {
                let mut parts: Vec<String> = Vec::with_capacity(xs.len());
                for x in xs {
                    let mut s = String::new();
                    x.render_into(&mut s, cap)?;
                    parts.push(s);
                }
                parts.sort();
                out.push('{');
                out.push_str(&parts.join(", "));
                out.push('}');
            }
            Value::Dict(pairs) => {
                out.push('{');
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    k.render_into(out, cap)?;
                    out.push_str(": ");
                    v.render_into(out, cap)?;
                }
                out.push('}');
            }
            Value::Opaque { repr, .. } => out.push_str(repr),
        }
        Ok(())
    }

    /// Equality with the reference language's `==` semantics.
    pub fn py_eq(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (None, None) => true,
            (Str(a), Str(b)) => a == b,
            (List(a), List(b)) | (Tuple(a), Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.py_eq(y))
            }
            (Set(a), Set(b)) => {
                a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| x.py_eq(y)))
            }
            (Dict(a), Dict(b)) => {
                a.len() == b.len()
                    && a.iter().all(|(k, v)| {
                        b.iter().any(|(k2, v2)| k.py_eq(k2) && v.py_eq(v2))
                    })
            }
            (Opaque { ty: t1, repr: r1 }, Opaque { ty: t2, repr: r2 }) => t1 == t2 && r1 == r2,
            _ => match (self.as_number(), other.as_number()) {
                (Some(a), Some(b)) => num_cmp(&a, &b) == Some(Ordering::Equal),
                _ => false,
            },
        }
    }

    /// Kind-sensitive structural equality: `1`, `1.0` and `True` differ;
    /// sets and dicts compare regardless of order.
    pub fn same_literal(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (None, None) => true,
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()),
            (Str(a), Str(b)) => a == b,
            (List(a), List(b)) | (Tuple(a), Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_literal(y))
            }
            (Set(a), Set(b)) => {
                a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| x.same_literal(y)))
            }
            (Dict(a), Dict(b)) => {
                a.len() == b.len()
                    && a.iter().all(|(k, v)| {
                        b.iter()
                            .any(|(k2, v2)| k.same_literal(k2) && v.same_literal(v2))
                    })
            }
            (Opaque { ty: t1, repr: r1 }, Opaque { ty: t2, repr: r2 }) => t1 == t2 && r1 == r2,
            _ => false,
        }
    }

    fn as_number(&self) -> Option<Num> {
        match self {
            Value::Bool(b) => Some(Num::Int(BigInt::from(*b as u8))),
            Value::Int(n) => Some(Num::Int(n.clone())),
            Value::Float(f) => Some(Num::Float(*f)),
            _ => None,
        }
    }

    /// Small-integer view, for convenience in tests and callers.
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(n) => n.to_i64(),
            Value::Bool(b) => Some(*b as i64),
            _ => None,
        }
    }

    pub fn is_zero_like(&self) -> bool {
        matches!(self, Value::Int(n) if n.is_zero())
    }
}

enum Num {
    Int(BigInt),
    Float(f64),
}

fn num_cmp(a: &Num, b: &Num) -> Option<Ordering> {
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => Some(x.cmp(y)),
        (Num::Float(x), Num::Float(y)) => x.partial_cmp(y),
        (Num::Int(x), Num::Float(y)) => cmp_int_float(x, *y),
        (Num::Float(x), Num::Int(y)) => cmp_int_float(y, *x).map(Ordering::reverse),
    }
}

fn render_seq(xs: &[Value], out: &mut String, cap: usize) -> Result<(), RenderOverflow> {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        x.render_into(out, cap)?;
    }
    Ok(())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl PartialEq for Value {
    /// Structural (kind-sensitive) equality.
    fn eq(&self, other: &Value) -> bool {
        self.same_literal(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(i: i64) -> Value {
        Value::Int(BigInt::from(i))
    }

    #[test]
    fn render_containers() {
        assert_eq!(Value::List(vec![int(1), int(2)]).render(), "[1, 2]");
        assert_eq!(Value::Tuple(vec![int(1)]).render(), "(1,)");
        assert_eq!(Value::Tuple(vec![]).render(), "()");
        assert_eq!(Value::Set(vec![]).render(), "set()");
        assert_eq!(Value::Dict(vec![]).render(), "{}");
        assert_eq!(
            Value::Dict(vec![(Value::Str("a".into()), Value::Float(1.0))]).render(),
            "{'a': 1.0}"
        );
    }

    #[test]
    fn sets_are_canonical() {
        let s = Value::set_from(vec![int(10), int(9), Value::Bool(true), int(1)]).unwrap();
        assert_eq!(s.render(), "{10, 9, True}");
        assert!(Value::set_from(vec![Value::List(vec![])]).is_err());
    }

    #[test]
    fn py_eq_crosses_numeric_kinds() {
        assert!(int(1).py_eq(&Value::Float(1.0)));
        assert!(int(1).py_eq(&Value::Bool(true)));
        assert!(!int(1).same_literal(&Value::Float(1.0)));
        assert!(!Value::Str("1".into()).py_eq(&int(1)));
        let a = Value::Tuple(vec![Value::Float(3.9), Value::Float(4.0)]);
        let b = Value::Tuple(vec![Value::Float(3.9), int(4)]);
        assert!(a.py_eq(&b));
    }

    #[test]
    fn render_cap() {
        let v = Value::Str("x".repeat(100));
        assert!(v.render_capped(102).is_ok());
        assert_eq!(v.render_capped(50), Err(RenderOverflow));
    }
}
